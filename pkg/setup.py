from setuptools import setup, find_packages

setup(
    name="diffusion_core_toolkit",
    version="0.1.0",
    packages=find_packages(exclude=["tests", "tests.*", "examples", "examples.*"]),
    include_package_data=True,
    python_requires=">=3.10",
    install_requires=[
        "numpy>=1.26",
        "scipy>=1.11",
        "networkx>=3.1",
        "pytz",
    ],
    extras_require={
        "test": ["pytest>=7.4"],
    },
    entry_points={
        "console_scripts": [
            "diffusion-core=diffusion_core.cli.main:main",
        ],
    },
    description="Numerical toolkit for resonance nets, normal forms, normally hyperbolic cylinders and Maupertuis geodesics",
    author="shree-dhimal",
)
