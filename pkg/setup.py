"""A setuptools based setup module for ox_slap

See LICENSE at the top-level of this distribution for more information.
"""

# see also setup.cfg

from os import path

from setuptools import setup, find_packages
from ox_slap import VERSION


def get_readme():
    'Get the long description from the README file'

    here = path.abspath(path.dirname(__file__))
    with open(path.join(here, 'README.rst'), encoding='utf-8') as my_fd:
        result = my_fd.read()

    return result


def get_requirements():
    'Read install requirements from requirements.txt'

    here = path.abspath(path.dirname(__file__))
    with open(path.join(here, 'requirements.txt'), encoding='utf-8') as my_fd:
        return [line.strip() for line in my_fd if line.strip()
                and not line.startswith('#')]


setup(
    name='ox_slap',
    version=VERSION,
    description=('Simulate and design single-site addressing of atoms in '
                 'optical lattices by position-dependent adiabatic passage'),
    long_description=get_readme(),
    license='BSD-2-Clause',
    classifiers=[
        'Development Status :: 3 - Alpha',
        'Intended Audience :: Science/Research',
        'Topic :: Scientific/Engineering :: Physics',
        'Programming Language :: Python :: 3',
    ],
    keywords='quantum optics lattice adiabatic passage simulation click',
    packages=find_packages(exclude=['contrib', 'docs', 'tests']),
    include_package_data=True,
    python_requires='>=3.8',
    install_requires=get_requirements(),
    package_data={
        'ox_slap.assets.configs': ['*.json'],
        'ox_slap.assets.plots': ['*.jinja'],
    },
    entry_points={
        'console_scripts': [
            'ox_slap=ox_slap.ui.cli:main',
        ],
    },
)
