#!/usr/bin/env python3
"""
Setup script for Symflow Project
Datalog program analysis with native and SMT solving of symbolic bit-vector expressions
"""

from setuptools import setup, find_packages

# Read the README file
def read_readme():
    with open("README.md", "r", encoding="utf-8") as fh:
        return fh.read()

# Read requirements, minus the development tools
def read_requirements():
    dev = ("pytest", "black", "flake8", "mypy")
    with open("requirements.txt", "r", encoding="utf-8") as fh:
        return [line.strip() for line in fh
                if line.strip() and not line.startswith("#") and not line.startswith(dev)]

setup(
    name="symflow",
    version="0.1.0",
    author="Symflow Team",
    description="Datalog program analysis with native and SMT solving of symbolic bit-vector expressions",
    long_description=read_readme(),
    long_description_content_type="text/markdown",
    packages=find_packages(exclude=["examples", "examples.*", "fixtures"]),
    classifiers=[
        "Development Status :: 3 - Alpha",
        "Intended Audience :: Developers",
        "Intended Audience :: Science/Research",
        "License :: OSI Approved :: MIT License",
        "Operating System :: OS Independent",
        "Programming Language :: Python :: 3",
        "Programming Language :: Python :: 3.10",
        "Programming Language :: Python :: 3.11",
        "Programming Language :: Python :: 3.12",
        "Topic :: Software Development :: Compilers",
        "Topic :: Software Development :: Quality Assurance",
    ],
    python_requires=">=3.10",
    install_requires=read_requirements(),
    extras_require={
        "dev": [
            "pytest>=7.4.0",
            "black>=23.0.0",
            "flake8>=6.0.0",
            "mypy>=1.5.0",
        ],
        "solver": [
            "z3-solver>=4.12.0",
        ],
    },
    entry_points={
        "console_scripts": [
            "symflow=src.ui.cli_interface:main",
        ],
    },
    include_package_data=True,
    package_data={
        "src.native_solver": ["*.dl"],
        "src.analyses": ["*.dl"],
    },
    keywords="datalog, program-analysis, symbolic-execution, smt, points-to, bitvector",
)
