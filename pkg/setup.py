#!/usr/bin/env python3

import os
from setuptools import setup, find_packages
import sdn_ledger

FILE_TYPES = [
    ".txt",
]

def has_required_files(files):
    for f in files:
        name, ext = os.path.splitext(f)
        if ext in FILE_TYPES:
            return True
    return False

def find_data_dirs(path):
    dirs = []
    for name, dlist, files in os.walk(path):
        if has_required_files(files):
            relpath = os.path.relpath(name, 'sdn_ledger')
            dirs.append(os.path.join(relpath, '*'))
    return dirs


setup(
    name = "django-sdn-ledger",
    version = sdn_ledger.__version__,
    fullname = "Django SDN Ledger",
    description = "A deterministic simulator of SDN controllers sharing a hash-chained ledger for command integrity and bandwidth reservations",
    keywords = "django sdn blockchain qos simulation",
    long_description = open('README.rst').read(),
    license = "BSD-3-Clause",
    package_data = {"sdn_ledger": find_data_dirs('sdn_ledger')},
    packages=find_packages(exclude=["sdn_ledger.tests", "sdn_ledger_testapp", "sdn_ledger_testapp.*"]),
    test_suite='runtests.runtests',
    install_requires=[
        'Django>=3.2',
        'networkx>=3.0',
        'awesome-slugify>=1.6',
    ],
    classifiers=[
        'Framework :: Django :: 3.2',
        'Framework :: Django :: 4.2',
        'Development Status :: 4 - Beta',
        'Environment :: Console',
        'Programming Language :: Python :: 3.8',
        'Programming Language :: Python :: 3.9',
        'Programming Language :: Python :: 3.10',
        'Intended Audience :: Science/Research',
        'Operating System :: OS Independent',
        'License :: OSI Approved :: BSD License',
        'Topic :: System :: Networking',
    ],
)
