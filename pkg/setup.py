from setuptools import setup, find_packages

VERSION = "0.1.0"

with open("requirements.txt", "r") as fs:
    reqs = [r for r in fs.read().splitlines() if (len(r) > 0 and not r.startswith("#"))]

setup(
    name="qkd_ike",
    packages=find_packages(exclude=["tests", "tests.*"]),
    version=VERSION,
    description="QKD based IKEv2 handshake lab for 5G untrusted non-3GPP access",
    install_requires=reqs,
    include_package_data=True,
    python_requires=">=3.9",
    entry_points={
        "console_scripts": [
            "qkd-ike=qkd_ike.bench.cli:main"
        ]
    }
)
