# Use of this source code is governed by the Apache License 2.0
# that can be found in the LICENSE file.

from setuptools import setup

with open('README.md') as f:
    long_description = f.read()

setup( name='tscausal',
       version='1.0',
       description='Causal identification in graphical time series models',
       long_description=long_description,
       long_description_content_type='text/markdown',
       packages=['tscausal'],
       package_data={ 'tscausal': [ 'static/*.json' ] },
       install_requires=[ 'jsonschema', 'pyparsing', 'PyYAML', 'numpy', 'scipy',
                          'networkx', 'pandas' ],
       test_suite="tests",
       entry_points = {
           'console_scripts': [ 'ts-causal=tscausal.cli:main',
                                'ts-graph=tscausal.cli:graphMain',
                                'ts-var=tscausal.cli:varMain',
                                'ts-ace=tscausal.cli:aceMain',
                              ],
       },
       zip_safe=False,
       include_package_data=True )
