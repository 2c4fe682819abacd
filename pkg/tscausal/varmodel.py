# Use of this source code is governed by the Apache License 2.0
# that can be found in the LICENSE file.

'''
Linear Gaussian VAR numerics: stationarity, autocovariances, autoregressive
representations of subprocesses, multi-step predictor coefficients, path
diagram extraction and coefficient-level Granger checks.

Conventions: A[j-1][b][a] is the coefficient of X_a(t-j) in the equation of
X_b(t), and Gamma(k) = E[ X(t) X(t-k)' ], so Gamma(-k) = Gamma(k)'.
'''

import logging

import numpy as np
import pandas as pd
import scipy.linalg

from . import causallib, graph
from .causallib import inputError, numericalError

log = logging.getLogger( __name__ )

STATIONARITY_MARGIN = 1e-8
MAX_CONDITION = 1e12
TAIL_LAGS = 5

def _matrix( value, shape, what ):
   try:
      result = np.array( value, dtype=float )
   except ( TypeError, ValueError ) as e:
      raise inputError( f'{what} is not a real matrix: {e}' )
   if result.shape != shape:
      raise inputError( f'{what} has shape {result.shape}, expected {shape}' )
   if not np.all( np.isfinite( result ) ):
      raise inputError( f'{what} has non-finite entries' )
   return result

class VarModel:
   def __init__( self, labels, A, Sigma, observed=None ):
      self.labels = [ str( l ) for l in labels ]
      if len( set( self.labels ) ) != len( self.labels ):
         raise inputError( 'VAR labels must be unique' )
      if not self.labels:
         raise inputError( 'VAR model needs at least one component' )
      d = len( self.labels )
      if len( A ) < 1:
         raise inputError( 'VAR lag order must be at least 1' )
      self.A = np.stack( [ _matrix( a, ( d, d ), f'A[{j}]' )
                           for j, a in enumerate( A ) ] )
      self.Sigma = _matrix( Sigma, ( d, d ), 'Sigma' )
      if not np.allclose( self.Sigma, self.Sigma.T, rtol=0, atol=1e-12 ):
         raise inputError( 'Sigma must be symmetric' )
      try:
         self.cholesky = np.linalg.cholesky( self.Sigma )
      except np.linalg.LinAlgError:
         raise inputError( 'Sigma must be positive definite' )
      if observed is None:
         observed = [ True ] * d
      if len( observed ) != d:
         raise inputError( f'observed has {len( observed )} entries, expected {d}' )
      self.observed = [ bool( o ) for o in observed ]
      self.A.setflags( write=False )
      self.Sigma.setflags( write=False )

   @property
   def d( self ):
      return len( self.labels )

   @property
   def p( self ):
      return self.A.shape[ 0 ]

   def index( self, label ):
      try:
         return self.labels.index( label )
      except ValueError:
         raise inputError( f'Unknown component {label!r}' )

   def indices( self, S ):
      '''
      Positions of the labels in S, in model order.
      '''
      S = set( S )
      unknown = sorted( S - set( self.labels ) )
      if unknown:
         raise inputError( f'Unknown component(s): {", ".join( unknown )}' )
      return [ i for i, l in enumerate( self.labels ) if l in S ]

   def toDocument( self ):
      return {
         'labels': list( self.labels ),
         'p': self.p,
         'A': self.A.tolist(),
         'Sigma': self.Sigma.tolist(),
         'observed': list( self.observed ),
      }

   def __repr__( self ):
      return f'VarModel(labels={self.labels}, p={self.p})'

def varFromDocument( document ):
   if document[ 'p' ] != len( document[ 'A' ] ):
      raise inputError( f'p is {document["p"]} but A has {len( document["A"] )} '
                        'lag matrices', location='A' )
   return VarModel( document[ 'labels' ], document[ 'A' ], document[ 'Sigma' ],
                    document.get( 'observed' ) )

def parseVar( text, source='<string>' ):
   return varFromDocument( causallib.parseDocument( text, 'var', source ) )

def loadVar( filename ):
   return varFromDocument( causallib.loadDocument( filename, 'var' ) )

class TimeSeriesData:
   def __init__( self, labels, values ):
      self.labels = [ str( l ) for l in labels ]
      values = np.array( values, dtype=float )
      if values.ndim != 2 or values.shape[ 1 ] != len( self.labels ):
         raise inputError( f'Data of shape {values.shape} does not match '
                           f'{len( self.labels )} labels' )
      if not np.all( np.isfinite( values ) ):
         raise inputError( 'Data has non-finite entries' )
      self.values = values

   @property
   def T( self ):
      return self.values.shape[ 0 ]

   def column( self, label ):
      if label not in self.labels:
         raise inputError( f'Unknown column {label!r}' )
      return self.values[ :, self.labels.index( label ) ]

   def select( self, labels ):
      missing = [ l for l in labels if l not in self.labels ]
      if missing:
         raise inputError( f'Unknown column(s): {", ".join( missing )}' )
      cols = [ self.labels.index( l ) for l in labels ]
      return TimeSeriesData( labels, self.values[ :, cols ] )

   def toFrame( self ):
      return pd.DataFrame( self.values, columns=self.labels )

   def toCsv( self, filename ):
      self.toFrame().to_csv( filename, index=False, float_format='%.17g' )

def loadCsv( filename ):
   try:
      frame = pd.read_csv( filename, dtype=float )
   except ( OSError, ValueError, pd.errors.ParserError ) as e:
      raise inputError( f'Error reading {filename}: {e}', location=filename )
   return TimeSeriesData( [ str( c ) for c in frame.columns ], frame.to_numpy() )

def companionMatrix( m ):
   d, p = m.d, m.p
   F = np.zeros( ( d * p, d * p ) )
   F[ :d, : ] = np.hstack( m.A )
   F[ d:, :-d ] = np.eye( d * ( p - 1 ) )
   return F

def checkStationary( m ):
   '''
   Spectral radius of the companion matrix. Models within STATIONARITY_MARGIN
   of the unit circle are rejected.
   '''
   radius = float( np.max( np.abs( np.linalg.eigvals( companionMatrix( m ) ) ) ) )
   log.debug( 'companion spectral radius %.12g', radius )
   if radius >= 1 - STATIONARITY_MARGIN:
      raise numericalError( f'Model is not stationary (spectral radius {radius:.6g})' )
   return radius

def _lagged( gammas, k ):
   return gammas[ k ] if k >= 0 else gammas[ -k ].T

def autocovariance( m, maxlag ):
   '''
   Gamma(0..maxlag). The first p lags come from the discrete Lyapunov equation
   of the companion form, the rest from the Yule-Walker recursion.
   '''
   if maxlag < 0:
      raise inputError( f'maxlag must be non-negative, got {maxlag}' )
   checkStationary( m )
   d, p = m.d, m.p
   Q = np.zeros( ( d * p, d * p ) )
   Q[ :d, :d ] = m.Sigma
   try:
      state = scipy.linalg.solve_discrete_lyapunov( companionMatrix( m ), Q )
   except ( np.linalg.LinAlgError, ValueError ) as e:
      raise numericalError( f'Lyapunov solve failed: {e}' )
   if not np.all( np.isfinite( state ) ):
      raise numericalError( 'Lyapunov solve produced non-finite autocovariances' )

   gammas = [ state[ :d, j * d:( j + 1 ) * d ] for j in range( min( p, maxlag + 1 ) ) ]
   gammas[ 0 ] = ( gammas[ 0 ] + gammas[ 0 ].T ) / 2
   for k in range( p, maxlag + 1 ):
      gammas.append( sum( m.A[ j - 1 ] @ _lagged( gammas, k - j )
                          for j in range( 1, p + 1 ) ) )
   return gammas

class SubprocessAR:
   def __init__( self, S, Phi, SigmaTilde, tailNorm, condition, tol ):
      self.S = list( S )
      self.Phi = [ np.asarray( phi ) for phi in Phi ]
      self.SigmaTilde = np.asarray( SigmaTilde )
      self.tailNorm = tailNorm
      self.condition = condition
      self.tol = tol
      self.warnings = []
      if tailNorm > causallib.TAIL_NORM_LIMIT:
         self.warn( f'Yule-Walker residual beyond lag {self.L} is {tailNorm:.3g}; '
                    'the truncated representation may be inaccurate' )

   @property
   def L( self ):
      return len( self.Phi )

   def warn( self, message ):
      log.warning( message )
      self.warnings.append( message )

   def index( self, label ):
      try:
         return self.S.index( label )
      except ValueError:
         raise inputError( f'{label!r} is not in the subprocess {self.S}' )

   def indices( self, labels ):
      return [ self.index( l ) for l in labels ]

   def coefficient( self, b, a, j ):
      return float( self.Phi[ j - 1 ][ self.index( b ), self.index( a ) ] )

   def nonzeroCoefficients( self ):
      result = []
      for j, phi in enumerate( self.Phi, start=1 ):
         for bi, b in enumerate( self.S ):
            for ai, a in enumerate( self.S ):
               if abs( phi[ bi, ai ] ) >= self.tol:
                  result.append( { 'b': b, 'a': a, 'lag': j,
                                   'value': float( phi[ bi, ai ] ) } )
      return result

   def toVarModel( self ):
      '''
      The truncated representation as a VAR(L) in its own right.
      '''
      try:
         np.linalg.cholesky( self.SigmaTilde )
      except np.linalg.LinAlgError:
         raise numericalError( f'Innovation covariance SigmaTilde of X_S, S = {self.S}, '
                               'is not positive definite' )
      return VarModel( self.S, self.Phi, self.SigmaTilde )

   def toJson( self ):
      nonzero = self.nonzeroCoefficients()
      return {
         'S': self.S,
         'L': self.L,
         'Phi': [ phi.tolist() for phi in self.Phi ],
         'SigmaTilde': self.SigmaTilde.tolist(),
         'tailNorm': self.tailNorm,
         'condition': self.condition,
         'diagnostics': {
            'nonzeroCoefficients': nonzero,
            'structuralZeros': self.L * len( self.S ) ** 2 - len( nonzero ),
            'tol': self.tol,
            'warnings': self.warnings,
         },
      }

def subprocessAr( m, S, L=None, tol=causallib.DEFAULT_TOL ):
   '''
   Autoregressive representation of X_S truncated at lag L, from the
   block-Toeplitz Yule-Walker system on the S-blocks of Gamma(0..L).
   '''
   if L is None:
      L = causallib.defaultLag( m.p )
   if L < m.p:
      raise inputError( f'Truncation lag {L} is below the model order {m.p}' )
   if not S:
      raise inputError( 'Subprocess needs at least one component' )
   idx = m.indices( S )
   labels = [ m.labels[ i ] for i in idx ]
   n = len( idx )

   gammas = autocovariance( m, L + TAIL_LAGS )
   GS = [ g[ np.ix_( idx, idx ) ] for g in gammas ]
   R = np.block( [ [ _lagged( GS, k - i ) for k in range( L ) ] for i in range( L ) ] )
   rhs = np.hstack( [ GS[ k ] for k in range( 1, L + 1 ) ] )
   condition = float( np.linalg.cond( R ) )
   if not np.isfinite( condition ) or condition > MAX_CONDITION:
      raise numericalError( f'Yule-Walker system for {labels} is singular '
                            f'(condition number {condition:.3g})' )
   try:
      PhiT = scipy.linalg.solve( R, rhs.T, assume_a='sym' )
   except np.linalg.LinAlgError as e:
      raise numericalError( f'Yule-Walker solve failed (condition number '
                            f'{condition:.3g}): {e}' )
   Phi = [ PhiT[ j * n:( j + 1 ) * n ].T for j in range( L ) ]

   SigmaTilde = GS[ 0 ] - sum( Phi[ j ] @ GS[ j + 1 ].T for j in range( L ) )
   SigmaTilde = ( SigmaTilde + SigmaTilde.T ) / 2
   if np.min( np.linalg.eigvalsh( SigmaTilde ) ) < -1e-9 * max( 1.0, np.abs( GS[ 0 ] ).max() ):
      raise numericalError( 'Innovation covariance of the subprocess is not '
                            'positive semidefinite' )

   tailNorm = max( np.linalg.norm( GS[ k ] - sum( Phi[ j - 1 ] @ GS[ k - j ]
                                                  for j in range( 1, L + 1 ) ) )
                   for k in range( L + 1, L + TAIL_LAGS + 1 ) )
   log.debug( 'subprocess %s: L=%d condition=%.3g tail=%.3g', labels, L,
              condition, tailNorm )
   return SubprocessAR( labels, Phi, SigmaTilde, float( tailNorm ), condition, tol )

class PredictorCoeffs:
   '''
   Coefficients of the best linear h-step predictor
   X_S(t+h) ~ sum_j PhiH[j-1] X_S(t+1-j), j = 1..L.
   '''
   def __init__( self, S, h, PhiH, truncated ):
      self.S = list( S )
      self.h = h
      self.PhiH = PhiH
      self.truncated = truncated

   @property
   def PhiH1( self ):
      return self.PhiH[ 0 ]

   def coefficient( self, b, a, j=1 ):
      return float( self.PhiH[ j - 1 ][ self.S.index( b ), self.S.index( a ) ] )

   def toJson( self ):
      return {
         'S': self.S,
         'h': self.h,
         'PhiH1': self.PhiH1.tolist(),
         'PhiH': [ phi.tolist() for phi in self.PhiH ],
         'truncated': self.truncated,
      }

def predictorProfiles( s, h ):
   '''
   PredictorCoeffs for horizons 1..h, from
   PhiH(j) = sum_{i=1}^{h-1} Phi(i) PhiH-i(j) + Phi(h+j-1), Phi(k) = 0 for k > L.
   '''
   if h < 1:
      raise inputError( f'Horizon must be at least 1, got {h}' )
   L = s.L
   truncated = h > L
   if truncated:
      s.warn( f'Horizon {h} exceeds the truncation lag {L}; Phi(k) is taken as '
              'zero beyond it' )
   zero = np.zeros_like( s.Phi[ 0 ] )

   def phi( k ):
      return s.Phi[ k - 1 ] if k <= L else zero

   profiles = [ list( s.Phi ) ]
   for g in range( 2, h + 1 ):
      profiles.append( [ sum( ( phi( i ) @ profiles[ g - i - 1 ][ j - 1 ]
                                for i in range( 1, min( g - 1, L ) + 1 ) ), zero ) +
                         phi( g + j - 1 )
                         for j in range( 1, L + 1 ) ] )
   return [ PredictorCoeffs( s.S, g + 1, profile, g + 1 > L )
            for g, profile in enumerate( profiles ) ]

def predictorCoeffs( s, h ):
   return predictorProfiles( s, h )[ -1 ]

def pathDiagram( m, tol=causallib.DEFAULT_TOL ):
   nodes = [ graph.Node( l, o ) for l, o in zip( m.labels, m.observed ) ]
   directed = []
   dashed = []
   for b, lb in enumerate( m.labels ):
      for a, la in enumerate( m.labels ):
         if a == b:
            continue
         if np.max( np.abs( m.A[ :, b, a ] ) ) > tol:
            directed.append( ( la, lb ) )
         if a < b and abs( m.Sigma[ a, b ] ) > tol:
            dashed.append( ( la, lb ) )
   return graph.MixedGraph( nodes, directed, dashed )

def _checkSubsets( s, A, B ):
   A, B = list( A ), list( B )
   if not A or not B:
      raise inputError( 'A and B must be non-empty' )
   if set( A ) & set( B ):
      raise inputError( 'A and B must be disjoint' )
   return s.indices( sorted( A ) ), s.indices( sorted( B ) )

def grangerNoncausalNumeric( s, A, B, tol=causallib.DEFAULT_TOL ):
   ia, ib = _checkSubsets( s, A, B )
   return all( np.max( np.abs( phi[ np.ix_( ib, ia ) ] ) ) <= tol for phi in s.Phi )

def contempIndependentNumeric( s, A, B, tol=causallib.DEFAULT_TOL ):
   ia, ib = _checkSubsets( s, A, B )
   return bool( np.max( np.abs( s.SigmaTilde[ np.ix_( ia, ib ) ] ) ) <= tol )

def grangerNoncausalHorizonNumeric( s, A, B, h, tol=causallib.DEFAULT_TOL ):
   '''
   True when no h'-step predictor of X_B, h' = 1..h, puts weight above tol on
   any lag of X_A.
   '''
   ia, ib = _checkSubsets( s, A, B )
   for coeffs in predictorProfiles( s, h ):
      for phi in coeffs.PhiH:
         if np.max( np.abs( phi[ np.ix_( ib, ia ) ] ) ) > tol:
            return False
   return True

def olsFit( data, p ):
   '''
   Equation-by-equation least squares of X(t) on X(t-1), ..., X(t-p), without
   intercept. Sigma is the residual covariance with T-p degrees of freedom.
   '''
   T, d = data.values.shape
   if p < 1:
      raise inputError( f'Lag order must be at least 1, got {p}' )
   if T <= 10 * d * p:
      raise inputError( f'Sample of length {T} is too short for {d} components '
                        f'at lag order {p}' )
   X = data.values
   Y = X[ p: ]
   Z = np.hstack( [ X[ p - j:T - j ] for j in range( 1, p + 1 ) ] )
   rank = np.linalg.matrix_rank( Z )
   if rank < d * p:
      raise numericalError( f'Regressor matrix is rank deficient (rank {rank} '
                            f'of {d * p})' )
   coef, _, _, _ = np.linalg.lstsq( Z, Y, rcond=None )
   residuals = Y - Z @ coef
   Sigma = residuals.T @ residuals / ( T - p )
   Sigma = ( Sigma + Sigma.T ) / 2
   A = [ coef[ j * d:( j + 1 ) * d ].T for j in range( p ) ]
   log.debug( 'OLS fit of %d samples at lag order %d', T, p )
   return VarModel( data.labels, A, Sigma )
