#!/usr/bin/env python

from setuptools import setup
import sys

VERSION = '0.3.0'

tests_require = [
    'pytest',
    'pytest-cov',
    'pytest-mock',
    'mock',
    'flake8',
    'hypothesis',
    'tox',
    'coverage',
]

install_requires = [
    'numpy>=1.17',
    'scipy>=1.4',
]

if sys.version_info[:2] < (3, 7):
    raise Exception('This library does not support Python versions below 3.7')

with open('README.md', encoding='utf8') as f:
    long_description = f.read()

if __name__ == '__main__':
    setup(
        name='contdict',
        version=VERSION,
        description='Gridless sparse coding and continuous dictionary learning for point clouds',
        long_description=long_description,
        long_description_content_type="text/markdown",
        packages=[
            "contdict",
        ],
        install_requires=install_requires,
        tests_require=tests_require,
        extras_require={
            'test': tests_require,
        },
        entry_points={
            'console_scripts': [
                'contdict = contdict.cli:main',
            ],
        },
        zip_safe=False,
        classifiers=['Programming Language :: Python :: 3.7',
                     'Programming Language :: Python :: 3.8',
                     'Programming Language :: Python :: 3.9',
                     'Programming Language :: Python :: 3.10'],
    )
