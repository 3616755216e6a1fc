import re
from pathlib import Path

from setuptools import find_packages, setup

DISTNAME = "qandysig"
LICENSE = "MIT"
CLASSIFIERS = [
    "Development Status :: 3 - Alpha",
    "License :: OSI Approved :: MIT License",
    "Operating System :: OS Independent",
    "Intended Audience :: Science/Research",
    "Intended Audience :: Education",
    "Programming Language :: Python",
    "Programming Language :: Python :: 3",
    "Programming Language :: Python :: 3.8",
    "Topic :: Scientific/Engineering",
    "Topic :: Security :: Cryptography",
]

INSTALL_REQUIRES = ["numpy >= 1.17", "scipy >= 1.2"]
TESTS_REQUIRE = ["pytest >= 3.8", "hypothesis >= 4.53.2", "scipy"]

DESCRIPTION = "Monte Carlo simulation of quantum digital signature protocols in the qandy model."
LONG_DESCRIPTION = """
qandysig simulates quantum digital signature schemes using "qandies", a classical toy
model of BB84 states: a qandy has a colour and a taste, only one of which can be
observed, and measuring it in the wrong basis yields a fair coin. The library provides
the qandy model itself, noisy quantum and authenticated classical channels, Lamport
signatures, one-time pad signatures, a three-party signature protocol with a
TEST-and-sign structure, a QKD-based protocol with its authenticated-key variant, and
forging and repudiating adversaries.

A harness runs reproducible Monte Carlo experiments over grids of key lengths, writes
JSON-lines trial records and CSV summaries, and fits the exponential decay of failure
probabilities in the key length.
"""


def _version() -> str:
    text = (Path(__file__).parent / "src" / "qandysig" / "_version.py").read_text()
    return re.search(r'__version__ = "([^"]+)"', text).group(1)


setup(
    name=DISTNAME,
    version=_version(),
    license=LICENSE,
    classifiers=CLASSIFIERS,
    description=DESCRIPTION,
    long_description=LONG_DESCRIPTION,
    install_requires=INSTALL_REQUIRES,
    tests_require=TESTS_REQUIRE,
    python_requires=">=3.8",
    packages=find_packages(where="src", exclude=["tests", "tests.*"]),
    package_dir={"": "src"},
    entry_points={"console_scripts": ["qandysig=qandysig.harness.cli:main"]},
)
