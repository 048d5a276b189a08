"""
Setup script for bipolarmhd package
"""

from setuptools import setup, find_packages  # type: ignore[import-untyped]
from pathlib import Path

# Read README for long description
readme_file = Path(__file__).parent / "README.md"
long_description = readme_file.read_text() if readme_file.exists() else ""

# Read version from __init__.py
version_file = Path(__file__).parent / "bipolarmhd" / "__init__.py"
version = "0.1.0"
if version_file.exists():
    for line in version_file.read_text().splitlines():
        if line.startswith("__version__"):
            version_str = line.split("=")[1].strip()
            if "#" in version_str:
                version_str = version_str.split("#")[0].strip()
            version = version_str.strip('"').strip("'")
            break

setup(
    name="bipolarmhd",
    version=version,
    description="Pseudo-spectral simulator and attractor-analysis toolkit for bipolar shear-thinning MHD",
    long_description=long_description,
    long_description_content_type="text/markdown",
    packages=find_packages(exclude=["tests", "tests.*", "examples", "examples.*", "docs", "docs.*"]),
    python_requires=">=3.9",
    install_requires=[
        "numpy>=1.22",
        "scipy>=1.8",
    ],
    extras_require={
        "dev": [
            "pytest>=6.0",
            "pytest-asyncio>=0.18.0",
            "sympy>=1.10",
            "black>=21.0",
            "mypy>=0.900",
        ],
    },
    entry_points={
        "console_scripts": [
            "bipolarmhd=bipolarmhd.cli:main",
        ],
    },
    classifiers=[
        "Development Status :: 4 - Beta",
        "Intended Audience :: Science/Research",
        "License :: OSI Approved :: MIT License",
        "Programming Language :: Python :: 3",
        "Topic :: Scientific/Engineering :: Physics",
    ],
    keywords="mhd pseudo-spectral non-newtonian bipolar attractor lyapunov",
    zip_safe=False,
    include_package_data=True,
)
