#!/usr/bin/env python3
"""
Setup script for axial-entropy
"""

from pathlib import Path

from setuptools import setup

BASE_DIR = Path(__file__).parent


def read_requirements():
    """Runtime requirements, without the test runner"""
    lines = (BASE_DIR / "requirements.txt").read_text().splitlines()
    return [line.strip() for line in lines if line.strip() and line.strip() != "pytest"]


setup(
    name="axial-entropy",
    version="1.0.0",
    description="Pattern counts and topological entropy of axial products of one-dimensional SFTs",
    long_description=(BASE_DIR / "README.md").read_text(),
    long_description_content_type="text/markdown",
    python_requires=">=3.8",
    py_modules=["app", "config"],
    packages=["src"],
    install_requires=read_requirements(),
    extras_require={"test": ["pytest"]},
    entry_points={"console_scripts": ["axial-entropy=app:main"]},
)
