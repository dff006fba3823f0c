from setuptools import setup, find_packages

setup(
    name="na-compile",
    version="0.1.0",
    description="Compiler and atom loss simulator for neutral atom quantum computers",
    license="GPL3",
    packages=find_packages(exclude=["tests"]),
    install_requires=[
        "numpy",
        "scipy",
        "pyyaml",
    ],
    entry_points={"console_scripts": ["naqc=naqc.cli:main"]},
)
