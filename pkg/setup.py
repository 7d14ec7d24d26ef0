from setuptools import setup, find_packages

with open("README.md", "r", encoding="utf-8") as fh:
    long_description = fh.read()

with open("requirements.txt", "r", encoding="utf-8") as fh:
    requirements = [
        line.split("#")[0].strip()
        for line in fh
        if line.split("#")[0].strip()
    ]

setup(
    name="banditphoenix",
    version="0.1.0",
    author="Your Name",
    author_email="your.email@example.com",
    description=(
        "Clustering of linear contextual bandits over a user graph, "
        "with a synthetic and replay simulator"
    ),
    long_description=long_description,
    long_description_content_type="text/markdown",
    packages=find_packages(where="src"),
    package_dir={"": "src"},
    package_data={"banditphoenix": ["database/schemas/*.sql"]},
    classifiers=[
        "Development Status :: 2 - Pre-Alpha",
        "Intended Audience :: Science/Research",
        "License :: OSI Approved :: MIT License",
        "Programming Language :: Python :: 3.12",
    ],
    python_requires=">=3.12",
    install_requires=requirements,
    entry_points={
        "console_scripts": [
            "banditphoenix=banditphoenix.main:main",
        ],
    },
)
