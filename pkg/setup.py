#!/usr/bin/env python
# -*- coding: utf-8 -*-

"""The setup script."""

from setuptools import setup, find_packages

with open('README.rst') as readme_file:
    readme = readme_file.read()

with open('HISTORY.rst') as history_file:
    history = history_file.read()

with open('requirements.txt') as req:
    setup_requirements = req.read()

test_requirements = setup_requirements

version = '0.1.0'

setup(
    author="lattice_fbm developers",
    python_requires='>=3.9',
    classifiers=[
        'Development Status :: 3 - Alpha',
        'Intended Audience :: Science/Research',
        'Topic :: Scientific/Engineering :: Mathematics',
        'License :: OSI Approved :: MIT License',
        'Programming Language :: Python :: 3',
        'Programming Language :: Python :: 3.9',
        'Programming Language :: Python :: 3.10',
        'Programming Language :: Python :: 3.11',
    ],
    description="Numerical laboratory for lattice dynamical systems driven by fractional Brownian motion.",
    entry_points={
        'console_scripts': [
            'lattice_fbm=lattice_fbm.cli:main',
        ],
    },
    install_requires=test_requirements,
    license="MIT license",
    long_description=readme + '\n\n' + history,
    include_package_data=True,
    keywords='lattice_fbm',
    name='lattice_fbm',
    packages=find_packages(exclude=['examples', 'examples.*']),
    setup_requires=setup_requirements,
    test_suite='tests',
    tests_require=test_requirements,
    version=version,
    zip_safe=False,
)
