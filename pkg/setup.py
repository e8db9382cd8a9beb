from setuptools import setup, find_packages

with open("requirements.txt") as f:
    required = [line for line in f.read().splitlines() if line and not line.startswith("pytest")]


setup(
    name="egovox",
    version="0.0.1",
    description="Event voxel grids, dynamic masks and egocentric pose metrics",
    license="Apache License 2.0",
    packages=find_packages(exclude=["tests", "tests.*"]),
    include_package_data=True,
    install_requires=required,
    extras_require={"test": ["pytest"]},
    entry_points={"console_scripts": ["egovox = egovox.cli:main"]},
)
