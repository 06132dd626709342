#!/usr/bin/env python

import codecs

from setuptools import setup
try:
    codecs.lookup('mbcs')
except LookupError:
    ascii = codecs.lookup('ascii')
    codecs.register(lambda name, enc=ascii: {True: enc}.get(name == 'mbcs'))

VERSION = '0.1.0'

setup(
    name='swa-lib',
    version=VERSION,
    description='Data-free quality audits of trained neural networks from their weight spectra',
    long_description=open('README.md').read(),
    long_description_content_type='text/markdown',
    keywords=['neural networks', 'spectral analysis', 'power law', 'safetensors', 'model quality'],
    packages=["swa", "swabase"],
    classifiers=[
        'License :: OSI Approved :: MIT License',
        'Operating System :: OS Independent',
        'Programming Language :: Python :: 3',
        'Development Status :: 3 - Alpha',
        'Intended Audience :: Developers',
        'Intended Audience :: Science/Research',
        'Topic :: Scientific/Engineering :: Artificial Intelligence',
    ],
    install_requires=[
        "numpy>=1.20",
        "scipy>=1.7",
        "appdirs>=1.4.0",
        "funcy",
        "pyyaml",
    ],
    entry_points={
        'console_scripts': [
            'swa = swa.cli:main',
        ],
    },
    setup_requires=['pytest-runner'],
    tests_require=['pytest'],
    include_package_data=True,
)
