#!/usr/bin/env python3
"""
Setup Script for FFTracer
"""

from pathlib import Path

import setuptools

here = Path(__file__).parent
requirements = [line.strip() for line in (here / 'requirements.txt').read_text().splitlines()
                if line.strip() and not line.startswith('pytest')]

setuptools.setup(
    name='fftracer',
    version='1.0.0',
    description='Filter functions and correlation filter functions of pulse sequences under classical noise',
    long_description=(here / 'README.md').read_text(),
    long_description_content_type='text/markdown',
    packages=['config', 'database', 'models', 'utils'],
    py_modules=['main', 'quick_start'],
    python_requires='>=3.8',
    install_requires=requirements,
    extras_require={'test': ['pytest>=7.0.0']},
    entry_points={'console_scripts': ['fftracer=main:cli']},
)
