# setup.py
from setuptools import setup, find_packages

setup(
    name='poi-cli',
    version='0.1.0',
    packages=find_packages(where='src'),
    package_dir={'': 'src'},
    py_modules=['poi_cli'],
    include_package_data=True,
    package_data={'common': ['cli_config.yaml']},
    install_requires=[
        'PyYAML>=6.0',
        'colorlog>=6.7.0',
        'python-dotenv>=1.0.0',
        'numpy>=1.22',
        'scipy>=1.8',
        'pandas>=1.4',
    ],
    extras_require={
        'test': ['pytest>=7.0'],
    },
    entry_points={
        'console_scripts': [
            'poi = poi_cli:poi_cli',
        ],
    },
    description='Points-of-impact estimation for functional data: simulation, estimation and Monte Carlo benchmarks.',
    long_description=open('README.md').read(),
    long_description_content_type='text/markdown',
    classifiers=[
        'Programming Language :: Python :: 3',
        'License :: OSI Approved :: MIT License',
        'Operating System :: OS Independent',
        'Development Status :: 3 - Alpha',
        'Intended Audience :: Science/Research',
        'Topic :: Scientific/Engineering :: Mathematics',
    ],
    python_requires='>=3.8',
)
