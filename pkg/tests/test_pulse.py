import numpy as np
import pytest

from models.basis import build_pauli_basis
from models.control_matrix import control_matrix_freq, sequence_control_matrix
from models.exceptions import ChannelMismatchError, ValidationError
from models.propagation import total_propagator
from models.pulse import InstantaneousGate, NoiseChannel, PulseSequence, Segment, concatenate
from models.spectra import FrequencyGrid, WhiteSpectrum


@pytest.fixture
def white():
    return WhiteSpectrum(1e-3)


def idle(duration, pauli, channels=('z',), white=None):
    segment = Segment.idle(duration, 2, {name: pauli['Z'] for name in channels})
    return PulseSequence((segment,), tuple(NoiseChannel(name, white or WhiteSpectrum(1.0)) for name in channels))


def test_segment_validation(pauli):
    with pytest.raises(ValidationError):
        Segment(-1.0, pauli['X'], {'z': pauli['Z']})
    with pytest.raises(ValidationError):
        Segment(1.0, np.array([[0, 1], [0, 0]]), {'z': pauli['Z']})
    with pytest.raises(ValidationError):
        Segment(1.0, pauli['X'], {'z': np.eye(4)})
    with pytest.raises(ValidationError):
        InstantaneousGate(np.array([[1, 1], [0, 1]]))


def test_sequence_needs_a_segment(pauli):
    with pytest.raises(ValidationError):
        PulseSequence((InstantaneousGate(pauli['X']),))


def test_segment_channels_must_match(pauli, white):
    segment = Segment(1.0, pauli['X'], {'z': pauli['Z']})
    with pytest.raises(ChannelMismatchError) as info:
        PulseSequence((segment,), (NoiseChannel('z', white), NoiseChannel('x', white)))
    assert info.value.channels == ['x']
    with pytest.raises(ValidationError):
        PulseSequence((segment,), (NoiseChannel('z', white), NoiseChannel('z', white)))


def test_gate_structure_and_times(pauli, white):
    channels = (NoiseChannel('z', white),)
    items = (Segment(1.0, pauli['X'], {'z': pauli['Z']}), InstantaneousGate(pauli['X']),
             Segment(0.5, pauli['Y'], {'z': pauli['Z']}))
    sequence = PulseSequence(items, channels, (0, 2, 3), ('a', 'b'))
    assert sequence.n_gates == 2
    assert sequence.total_duration() == pytest.approx(1.5)
    np.testing.assert_allclose(sequence.item_start_times(), [0.0, 1.0, 1.0, 1.5])
    np.testing.assert_allclose(sequence.boundary_times(), [0.0, 1.0, 1.5])
    assert len(sequence.gate_items(0)) == 2
    assert sequence.gate(1).total_duration() == pytest.approx(0.5)
    with pytest.raises(ValidationError):
        PulseSequence(items, channels, (0, 2, 2, 3))
    with pytest.raises(ValidationError):
        PulseSequence(items, channels, (0, 3), ('a', 'b'))


def test_concatenate_labels_and_durations(pauli, white):
    a, b = idle(1.0, pauli), idle(2.0, pauli)
    joined = concatenate([a, InstantaneousGate(-1j * pauli['X'], 'pi'), b])
    assert joined.n_gates == 3
    assert joined.gate_boundaries == (0, 1, 2, 3)
    assert joined.total_duration() == pytest.approx(3.0)
    assert joined.gate_labels[1].startswith('pi')
    assert len(set(joined.gate_labels)) == 3


def test_concatenate_is_associative_with_preserved_boundaries(pauli):
    a, b, c = idle(1.0, pauli), idle(2.0, pauli), idle(0.5, pauli)
    left = concatenate([concatenate([a, b]), c], preserve_boundaries=True)
    right = concatenate([a, concatenate([b, c])], preserve_boundaries=True)
    assert left.gate_boundaries == right.gate_boundaries == (0, 1, 2, 3)
    assert left.content_hash() == right.content_hash()


def test_default_concatenate_is_associative_up_to_gate_boundaries(random_sequence):
    basis = build_pauli_basis(1)
    grid = FrequencyGrid.log(1e-2, 1e2, 200)
    a, b, c = (random_sequence(n_segments=n, instantaneous=n == 2) for n in (1, 2, 3))
    left = concatenate([concatenate([a, b]), c])
    right = concatenate([a, concatenate([b, c])])
    # nesting decides which inputs merge into one gate
    assert left.gate_boundaries == (0, len(a.items) + len(b.items), len(left.items))
    assert right.gate_boundaries == (0, len(a.items), len(right.items))
    assert left.content_hash() == right.content_hash()
    np.testing.assert_allclose(total_propagator(left), total_propagator(right), atol=1e-12)
    for build in (control_matrix_freq, sequence_control_matrix):
        np.testing.assert_allclose(build(left, basis, grid).values, build(right, basis, grid).values,
                                   rtol=1e-9, atol=1e-12)


def test_concatenate_rejects_channel_mismatch(pauli):
    with pytest.raises(ChannelMismatchError) as info:
        concatenate([idle(1.0, pauli, ('z',)), idle(1.0, pauli, ('z', 'x'))])
    assert info.value.channels == ['x']


def test_with_spectra_and_restricted(pauli):
    sequence = idle(1.0, pauli, ('z', 'x'))
    replaced = sequence.with_spectra({'x': WhiteSpectrum(5.0)})
    assert replaced.spectra['x'].s0 == 5.0
    assert replaced.content_hash() == sequence.content_hash()
    only_z = sequence.restricted(['z'])
    assert only_z.channel_names == ['z']
    assert set(only_z.segments[0].noise_operators) == {'z'}
    with pytest.raises(ChannelMismatchError):
        sequence.restricted(['y'])


def test_to_config_lists_items(pauli):
    sequence = concatenate([idle(1.0, pauli), InstantaneousGate(pauli['X'], 'x'), idle(1.0, pauli)])
    config = sequence.to_config()
    assert config['dimension'] == 2
    assert [item['type'] for item in config['items']] == ['segment', 'gate', 'segment']
    assert config['gate_boundaries'] == [0, 1, 2, 3]
