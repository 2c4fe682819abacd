# Use of this source code is governed by the Apache License 2.0
# that can be found in the LICENSE file.

# Fixture graphs and VAR models shared by the tests.
#
# FOUR_NODE: an(b) = {a,b,c,d}; c but not d separates a and b; every back-door
# walk from a starts with a <- d.

import itertools
import os

import numpy as np

from tscausal import graph, varmodel

DATA_DIR = os.path.join( os.path.dirname( os.path.abspath( __file__ ) ), 'data' )

def dataPath( name ):
    return os.path.join( DATA_DIR, name )

def loadGraphFixture( name ):
    return graph.loadGraph( dataPath( f'{name}.json' ) )

FEEDBACK = graph.MixedGraph(
    [ '1', '2', '3', graph.Node( 'z', observed=False ) ],
    [ ( 'z', '1' ), ( 'z', '2' ), ( '2', '1' ), ( '3', '2' ), ( '2', '3' ) ] )

DASHED_CHAIN = graph.MixedGraph( [ 'a', 'b', 'c' ], [ ( 'a', 'c' ), ( 'c', 'b' ) ],
                                 [ ( 'c', 'b' ) ] )

FOUR_NODE = graph.MixedGraph( [ 'a', 'b', 'c', 'd' ],
                              [ ( 'd', 'a' ), ( 'd', 'c' ), ( 'a', 'c' ), ( 'c', 'b' ) ],
                              [ ( 'c', 'd' ) ] )

FRONT_DOOR = graph.MixedGraph(
    [ '1', '2', '3', graph.Node( 'z', observed=False ) ],
    [ ( 'z', '1' ), ( '3', '2' ), ( '2', '1' ) ], [ ( 'z', '3' ) ] )

CHAIN = graph.MixedGraph( [ '1', '2', '3' ], [ ( '3', '2' ), ( '2', '1' ) ] )

# Parameters of the two structural models.
ALPHA1, ALPHA2, BETA12, BETA23, BETA32 = 0.4, 0.3, 0.5, -0.4, 0.3
ALPHA, RHO = 0.6, 0.5

# Coefficients of the autoregressive representation of X_{1,2,3}.
MEDIATED_PHI12_1 = ALPHA1 * ALPHA2 / ( 1 + ALPHA2 ** 2 ) + BETA12      # 0.6100917...
MEDIATED_PHI13_2 = -ALPHA1 * ALPHA2 * BETA23 / ( 1 + ALPHA2 ** 2 )     # 0.0440367...
ACE_3_ON_1_H2 = BETA12 * BETA23                                     # -0.2

def mediatedModel( alpha1=ALPHA1, alpha2=ALPHA2, beta12=BETA12, beta23=BETA23,
                    beta32=BETA32, sigma2=1.0 ):
    '''
    X1(t) = alpha1 Z(t-2) + beta12 X2(t-1) + e1(t)
    X2(t) = alpha2 Z(t-1) + beta23 X3(t-1) + e2(t)
    X3(t) = beta32 X2(t-1) + e3(t), with Z white noise.
    '''
    A1 = np.zeros( ( 4, 4 ) )
    A2 = np.zeros( ( 4, 4 ) )
    A1[ 0, 1 ] = beta12
    A1[ 1, 2 ] = beta23
    A1[ 1, 3 ] = alpha2
    A1[ 2, 1 ] = beta32
    A2[ 0, 3 ] = alpha1
    return varmodel.VarModel( [ '1', '2', '3', 'z' ], [ A1, A2 ], sigma2 * np.eye( 4 ),
                              [ True, True, True, False ] )

def confoundedModel( alpha=ALPHA, rho=RHO, beta12=BETA12, beta23=BETA23, sigma2=1.0 ):
    '''
    X1(t) = alpha Z(t-2) + beta12 X2(t-1) + e1(t)
    X2(t) = beta23 X3(t-1) + e2(t)
    X3(t) = e3(t), with corr( Z(t), e3(t) ) = rho.
    '''
    A1 = np.zeros( ( 4, 4 ) )
    A2 = np.zeros( ( 4, 4 ) )
    A1[ 0, 1 ] = beta12
    A1[ 1, 2 ] = beta23
    A2[ 0, 3 ] = alpha
    Sigma = np.eye( 4 )
    Sigma[ 2, 3 ] = Sigma[ 3, 2 ] = rho
    return varmodel.VarModel( [ '1', '2', '3', 'z' ], [ A1, A2 ], sigma2 * Sigma,
                              [ True, True, True, False ] )

def whiteNoiseModel( d=3 ):
    labels = [ str( i + 1 ) for i in range( d ) ]
    return varmodel.VarModel( labels, [ np.zeros( ( d, d ) ) ], np.eye( d ) )

def scalarAr1( a=0.5, sigma2=1.0 ):
    return varmodel.VarModel( [ 'x' ], [ [ [ a ] ] ], [ [ sigma2 ] ] )

def randomGraph( rng, nodes=4, prob=0.35 ):
    '''
    Random mixed graph; every ordered pair may carry a directed edge and every
    unordered pair a dashed edge, so parallel a->b, b->a, a---b occur.
    '''
    ids = [ chr( ord( 'a' ) + i ) for i in range( nodes ) ]
    directed = [ ( u, v ) for u, v in itertools.permutations( ids, 2 )
                 if rng.random() < prob ]
    dashed = [ ( u, v ) for u, v in itertools.combinations( ids, 2 )
               if rng.random() < prob ]
    return graph.MixedGraph( ids, directed, dashed )

def randomModel( rng, d=4, p=2, density=0.4, radius=0.6 ):
    '''
    Random stationary VAR: sparse lag matrices rescaled so that the companion
    spectral radius is `radius`, diagonal innovation covariance.
    '''
    labels = [ f'x{i}' for i in range( d ) ]
    A = rng.normal( size=( p, d, d ) ) * ( rng.random( ( p, d, d ) ) < density )
    model = varmodel.VarModel( labels, A, np.eye( d ) )
    current = np.max( np.abs( np.linalg.eigvals( varmodel.companionMatrix( model ) ) ) )
    if current > 0:
        # scaling lag j by c**j scales every companion eigenvalue by c
        scale = radius / current
        A = np.stack( [ A[ j ] * scale ** ( j + 1 ) for j in range( p ) ] )
    return varmodel.VarModel( labels, A, np.diag( rng.uniform( 0.5, 1.5, size=d ) ) )
