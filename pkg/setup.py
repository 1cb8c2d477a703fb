import setuptools
import os

# Get the absolute path of requirements.txt
req_path = os.path.join(os.path.dirname(__file__), "requirements.txt")

# Read requirements.txt safely
with open(req_path, "r", encoding="utf-8") as f:
    requirements = f.read().splitlines()

# Read README.md
with open("README.md", "r", encoding="utf-8") as fh:
    long_description = fh.read()

setuptools.setup(
    name="spatialfdr",
    version="0.1.0",
    description="False discovery rate control for spatial signals with locally aggregated p-values",
    long_description=long_description,
    long_description_content_type="text/markdown",
    packages=setuptools.find_packages(include=["SpatialFDR", "SpatialFDR_cli"]),
    python_requires='>=3.9',
    license='MIT',
    install_requires=requirements,
    extras_require={"dev": ["pytest>=7.4"]},
    keywords="false-discovery-rate, multiple-testing, spatial-statistics, median-filter, p-values, fmri, thresholding, lattice, simulation",
    entry_points={
        'console_scripts': [
            'spatialfdr=SpatialFDR_cli.fdrl_cli:main',
        ],
    },
)
