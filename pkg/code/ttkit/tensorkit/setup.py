"""
Setup script for the tensorkit numerical package of the ttkit project.
"""

from setuptools import find_packages
from setuptools import setup

setup(
    name="tensorkit",
    version="0.1.0",
    packages=find_packages(),
)
