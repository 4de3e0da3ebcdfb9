from setuptools import setup

setup(
    name = 'dynperc',
    version = '1.0',
    description = 'Mixing and noise sensitivity of dynamical percolation observables',
    license = 'Apache 2.0',
    packages = [
        'dynperc',
        'command_modules',
        'utils'
    ],
    # Map packages to their actual dirs
    package_dir = {
        'dynperc': 'dynperc',
        'command_modules': 'command_modules',
        'utils': 'utils'
    },
    scripts=[
        'scripts/dynperc_cli.py'
    ],
    install_requires = [
        'numpy>=1.22',
        'scipy>=1.8',
        'psutil',
        'PyYAML'
    ],
    setup_requires = [
        'pytest-runner',
        'wheel'
    ],
    tests_require = [
        'parameterized',
        'pytest',
        'pytest-cov',
        'pyfakefs',
        'deepdiff>=6.2.2'
    ],
    extras_require = {
        "testing": [
            'parameterized',
            'pytest',
            'pytest-cov',
            'pyfakefs',
            'deepdiff>=6.2.2'
        ]
    },
    classifiers = [
        'Development Status :: 3 - Alpha',
        'Environment :: Console',
        'Intended Audience :: Science/Research',
        'License :: OSI Approved :: Apache Software License',
        'Natural Language :: English',
        'Programming Language :: Python :: 3.8',
        'Topic :: Scientific/Engineering :: Mathematics',
    ],
    keywords = 'percolation markov-chain fourier noise-sensitivity',
)
