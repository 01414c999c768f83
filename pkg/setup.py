from setuptools import find_packages, setup

setup(
    name="einstein-lab",
    version="0.1.0",
    packages=find_packages("src"),
    package_dir={"": "src"},
    entry_points={"console_scripts": ["einstein-lab=einstein_lab.cli:main"]},
)
