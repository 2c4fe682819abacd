# Use of this source code is governed by the Apache License 2.0
# that can be found in the LICENSE file.

'''
Intervention regimes, simulation under the observational and interventional
regimes, and average causal effects (ACE) computed analytically, through the
plug-in formula over a subprocess representation, or by Monte Carlo.

An intervention replaces the output of the target's structural equation at
one time index. Every innovation is drawn exactly as in the observational run,
so a replication is identical to its observational counterpart up to the
earliest intervention, and the non-target components agree at that time too.

Random streams: replication r draws its innovations row by row (row = time)
from Philox(SeedSequence([seed, r])); draws for random strategies come from
Philox(SeedSequence([seed, r, 1])), one per random spec in spec order.
'''

import collections
import concurrent.futures
import logging
import math

import numpy as np
from numpy.random import Generator, Philox, SeedSequence

from . import causallib
from .causallib import inputError
from .varmodel import TimeSeriesData, checkStationary, predictorProfiles

log = logging.getLogger( __name__ )

CHUNK_SIZE = 4096

ANALYTIC_BACK_DOOR = 'AnalyticBackDoor'
ANALYTIC_FRONT_DOOR = 'AnalyticFrontDoor'
PLUGIN_EQ1 = 'PluginEq1'
MONTE_CARLO_ORACLE = 'MonteCarloOracle'

class Strategy:
   kind = None
   C = ()
   window = 0

   def mean( self, X, t, columns ):
      '''
      Value set by the strategy at time index t, as a vector over the
      replications in X ( reps x time x components ). None leaves the target
      alone.
      '''
      raise NotImplementedError

   def toJson( self ):
      return { 'kind': self.kind }

class Idle( Strategy ):
   kind = 'idle'

   def mean( self, X, t, columns ):
      return None

class Atomic( Strategy ):
   kind = 'atomic'

   def __init__( self, x ):
      self.x = float( x )

   def mean( self, X, t, columns ):
      return np.full( X.shape[ 0 ], self.x )

   def toJson( self ):
      return { 'kind': self.kind, 'x': self.x }

class Conditional( Strategy ):
   '''
   Affine in the last `window` values of X_C:
   intercept + sum_k sum_i coeffs[ (k-1)|C| + i ] X_{C[i]}(t-k).
   '''
   kind = 'conditional'

   def __init__( self, C=(), window=1, coeffs=(), intercept=0.0 ):
      self.C = list( C )
      self.window = int( window )
      self.coeffs = [ float( c ) for c in coeffs ]
      self.intercept = float( intercept )
      if self.window < 1:
         raise inputError( f'Strategy window must be at least 1, got {window}' )
      if len( set( self.C ) ) != len( self.C ):
         raise inputError( 'Strategy conditioning set has duplicates' )
      if len( self.coeffs ) != self.window * len( self.C ):
         raise inputError( f'Strategy needs {self.window * len( self.C )} '
                           f'coefficients, got {len( self.coeffs )}' )

   def mean( self, X, t, columns ):
      value = np.full( X.shape[ 0 ], self.intercept )
      for k in range( 1, self.window + 1 ):
         for i, c in enumerate( self.C ):
            coeff = self.coeffs[ ( k - 1 ) * len( self.C ) + i ]
            if coeff:
               value += coeff * X[ :, t - k, columns[ c ] ]
      return value

   def toJson( self ):
      return { 'kind': self.kind, 'C': self.C, 'window': self.window,
               'coeffs': self.coeffs, 'intercept': self.intercept }

class RandomShift( Conditional ):
   kind = 'random'

   def __init__( self, C=(), window=1, coeffs=(), intercept=0.0, stddev=0.0 ):
      super( RandomShift, self ).__init__( C, window, coeffs, intercept )
      if stddev < 0:
         raise inputError( f'Strategy stddev must be non-negative, got {stddev}' )
      self.stddev = float( stddev )

   def toJson( self ):
      result = super( RandomShift, self ).toJson()
      result[ 'stddev' ] = self.stddev
      return result

def strategyFromDocument( document ):
   kind = document[ 'kind' ]
   try:
      if kind == 'idle':
         return Idle()
      if kind == 'atomic':
         return Atomic( document[ 'x' ] )
      args = ( document.get( 'C', [] ), document.get( 'window', 1 ),
               document.get( 'coeffs', [] ), document.get( 'intercept', 0.0 ) )
      if kind == 'conditional':
         return Conditional( *args )
      return RandomShift( *args, stddev=document.get( 'stddev', 0.0 ) )
   except KeyError as e:
      raise inputError( f'{kind} strategy needs field {e}', location='strategy' )

class InterventionSpec:
   def __init__( self, target, time, strategy ):
      self.target = target
      self.time = int( time )
      self.strategy = strategy
      if self.time < 0:
         raise inputError( f'Intervention time must be non-negative, got {time}' )

   def toJson( self ):
      return { 'target': self.target, 'time': self.time,
               'strategy': self.strategy.toJson() }

   def __repr__( self ):
      return f'InterventionSpec({self.target!r}, {self.time}, {self.strategy.kind})'

def specsFromDocument( document ):
   if isinstance( document, dict ):
      document = [ document ]
   return [ InterventionSpec( d[ 'target' ], d.get( 'time', 0 ),
                              strategyFromDocument( d[ 'strategy' ] ) )
            for d in document ]

def parseSpecs( text, source='<string>' ):
   return specsFromDocument( causallib.parseDocument( text, 'intervention', source ) )

def loadSpecs( filename ):
   return specsFromDocument( causallib.loadDocument( filename, 'intervention' ) )

def checkSpecs( labels, specs, burnIn ):
   seen = set()
   for i, spec in enumerate( specs ):
      location = f'{i}'
      if spec.target not in labels:
         raise inputError( f'Unknown intervention target {spec.target!r}',
                           location=location )
      unknown = sorted( set( spec.strategy.C ) - set( labels ) )
      if unknown:
         raise inputError( f'Unknown conditioning component(s): {", ".join( unknown )}',
                           location=location )
      if spec.strategy.window > burnIn + spec.time:
         raise inputError( f'Strategy window {spec.strategy.window} reaches before '
                           'the start of the simulated path', location=location )
      key = ( spec.target, spec.time )
      if key in seen:
         raise inputError( f'Two interventions on {spec.target!r} at time {spec.time}',
                           location=location )
      seen.add( key )

class RunningMoments:
   '''
   Streaming mean and variance; batches are merged with the pairwise update,
   so the result depends only on the batch sequence.
   '''
   def __init__( self ):
      self.n = 0
      self.mean = 0.0
      self.m2 = 0.0

   def update( self, values ):
      values = np.asarray( values, dtype=float )
      n = values.size
      if not n:
         return
      mean = float( values.mean() )
      m2 = float( ( ( values - mean ) ** 2 ).sum() )
      total = self.n + n
      delta = mean - self.mean
      self.mean += delta * n / total
      self.m2 += m2 + delta * delta * self.n * n / total
      self.n = total

   @property
   def variance( self ):
      return self.m2 / ( self.n - 1 ) if self.n > 1 else 0.0

   @property
   def stderr( self ):
      return math.sqrt( self.variance / self.n ) if self.n else 0.0

class AceResult:
   def __init__( self, value, stderr, method, b, h, a=None, diagnostics=None ):
      if stderr < 0:
         raise ValueError( 'stderr must be non-negative' )
      self.value = float( value )
      self.stderr = float( stderr )
      self.method = method
      self.a = a
      self.b = b
      self.h = h
      self.diagnostics = diagnostics or {}

   def toJson( self ):
      return { 'value': self.value, 'stderr': self.stderr, 'method': self.method,
               'a': self.a, 'b': self.b, 'h': self.h,
               'diagnostics': self.diagnostics }

   def __repr__( self ):
      return f'AceResult({self.method}, {self.value:.6g} +- {self.stderr:.3g})'

def _replicationChunks( reps ):
   return [ ( start, min( start + CHUNK_SIZE, reps ) )
            for start in range( 0, reps, CHUNK_SIZE ) ]

def _simulateChunk( m, steps, seed, burnIn, specs, start, stop ):
   d, p = m.d, m.p
   N = burnIn + steps
   eps = np.stack( [ Generator( Philox( SeedSequence( [ seed, r ] ) ) ).standard_normal(
      ( N, d ) ) for r in range( start, stop ) ] )
   randomSpecs = [ s for s in specs if isinstance( s.strategy, RandomShift ) ]
   noise = None
   if randomSpecs:
      noise = np.stack( [ Generator( Philox( SeedSequence( [ seed, r, 1 ] ) ) ).standard_normal(
         len( randomSpecs ) ) for r in range( start, stop ) ] )

   # Elementwise accumulation in a fixed order keeps every replication's path
   # independent of how many replications share the batch.
   shocks = np.zeros_like( eps )
   for b in range( d ):
      for a in range( b + 1 ):
         if m.cholesky[ b, a ]:
            shocks[ :, :, b ] += m.cholesky[ b, a ] * eps[ :, :, a ]
   terms = [ ( j, b, a, m.A[ j - 1, b, a ] ) for j in range( 1, p + 1 )
             for b in range( d ) for a in range( d ) if m.A[ j - 1, b, a ] ]

   columns = { l: i for i, l in enumerate( m.labels ) }
   byTime = {}
   for spec in specs:
      byTime.setdefault( burnIn + spec.time, [] ).append( spec )

   X = np.zeros( ( stop - start, N, d ) )
   for t in range( N ):
      x = shocks[ :, t, : ].copy()
      for j, b, a, coeff in terms:
         if t >= j:
            x[ :, b ] += coeff * X[ :, t - j, a ]
      X[ :, t, : ] = x
      for spec in byTime.get( t, () ):
         value = spec.strategy.mean( X, t, columns )
         if value is None:
            continue
         if isinstance( spec.strategy, RandomShift ):
            value = value + spec.strategy.stddev * noise[ :, randomSpecs.index( spec ) ]
         X[ :, t, columns[ spec.target ] ] = value
   return X[ :, burnIn:, : ]

def _chunkedPaths( m, steps, reps, seed, burnIn, specs, workers ):
   '''
   Yield path blocks of consecutive replications in replication order. At most
   2 * workers chunks are in flight at any time.
   '''
   chunks = _replicationChunks( reps )
   run = lambda chunk: _simulateChunk( m, steps, seed, burnIn, specs, *chunk )
   if workers <= 1 or len( chunks ) == 1:
      for chunk in chunks:
         yield run( chunk )
      return
   with concurrent.futures.ThreadPoolExecutor( max_workers=workers ) as executor:
      pending = collections.deque()
      for chunk in chunks:
         pending.append( executor.submit( run, chunk ) )
         if len( pending ) >= 2 * workers:
            yield pending.popleft().result()
      while pending:
         yield pending.popleft().result()

def _checkSimulation( m, steps, reps, seed, burnIn, specs ):
   if steps < 1:
      raise inputError( f'Number of steps must be at least 1, got {steps}' )
   if reps < 1:
      raise inputError( f'Number of replications must be at least 1, got {reps}' )
   if seed < 0:
      raise inputError( f'Seed must be non-negative, got {seed}' )
   if burnIn < 0:
      raise inputError( f'Burn-in must be non-negative, got {burnIn}' )
   checkSpecs( m.labels, specs, burnIn )
   late = [ s for s in specs if s.time >= steps ]
   if late:
      raise inputError( f'Intervention at time {late[ 0 ].time} is outside a window '
                        f'of {steps} steps' )
   checkStationary( m )

def simulatePaths( m, steps, reps, seed, burnIn=causallib.DEFAULT_BURN_IN, specs=(),
                   workers=1 ):
   '''
   Trajectories of shape ( reps, steps, d ) after discarding burnIn samples.
   Spec times count from the first retained sample.
   '''
   specs = list( specs )
   _checkSimulation( m, steps, reps, seed, burnIn, specs )
   return np.concatenate( list( _chunkedPaths( m, steps, reps, seed, burnIn, specs,
                                               workers ) ) )

def simulateObservational( m, T, seed, burnIn=causallib.DEFAULT_BURN_IN ):
   paths = simulatePaths( m, T, 1, seed, burnIn )
   return TimeSeriesData( m.labels, paths[ 0 ] )

def _outcomeWindow( m, specs, b, h ):
   if not specs:
      raise inputError( 'At least one intervention is required' )
   if h < 1:
      raise inputError( f'Horizon must be at least 1, got {h}' )
   m.index( b )
   t0 = min( s.time for s in specs )
   return t0, max( t0 + h, max( s.time for s in specs ) ) + 1

def simulateInterventional( m, specs, b, h, reps, seed, burnIn=causallib.DEFAULT_BURN_IN,
                            workers=1 ):
   '''
   Monte Carlo estimate of E_s X_b(t0+h), t0 the earliest intervention time.
   '''
   specs = list( specs )
   if reps < 2:
      raise inputError( f'Need at least 2 replications, got {reps}' )
   t0, steps = _outcomeWindow( m, specs, b, h )
   _checkSimulation( m, steps, reps, seed, burnIn, specs )
   ib = m.index( b )
   moments = RunningMoments()
   for block in _chunkedPaths( m, steps, reps, seed, burnIn, specs, workers ):
      moments.update( block[ :, t0 + h, ib ] )
   first = min( specs, key=lambda s: s.time )
   log.info( 'oracle E_s X_%s(t+%d) = %.6g +- %.3g over %d replications', b, h,
             moments.mean, moments.stderr, reps )
   return AceResult( moments.mean, moments.stderr, MONTE_CARLO_ORACLE, b, h,
                     a=first.target,
                     diagnostics={ 'reps': reps, 'seed': seed, 'burnIn': burnIn,
                                   'specs': [ s.toJson() for s in specs ] } )

def simulateContrast( m, specsFirst, specsSecond, b, h, reps, seed,
                      burnIn=causallib.DEFAULT_BURN_IN, workers=1 ):
   '''
   Paired estimate of E_s1 X_b(t1+h) - E_s2 X_b(t2+h): both regimes reuse the
   innovations of each replication, and the standard error comes from the
   paired differences.
   '''
   specsFirst, specsSecond = list( specsFirst ), list( specsSecond )
   if reps < 2:
      raise inputError( f'Need at least 2 replications, got {reps}' )
   t1, steps1 = _outcomeWindow( m, specsFirst, b, h )
   t2, steps2 = _outcomeWindow( m, specsSecond, b, h )
   steps = max( steps1, steps2 )
   _checkSimulation( m, steps, reps, seed, burnIn, specsFirst )
   _checkSimulation( m, steps, reps, seed, burnIn, specsSecond )
   ib = m.index( b )
   moments = RunningMoments()
   blocks = zip( _chunkedPaths( m, steps, reps, seed, burnIn, specsFirst, workers ),
                 _chunkedPaths( m, steps, reps, seed, burnIn, specsSecond, workers ) )
   for first, second in blocks:
      moments.update( first[ :, t1 + h, ib ] - second[ :, t2 + h, ib ] )
   return AceResult( moments.mean, moments.stderr, MONTE_CARLO_ORACLE, b, h,
                     diagnostics={ 'reps': reps, 'seed': seed, 'burnIn': burnIn,
                                   'paired': True,
                                   'first': [ s.toJson() for s in specsFirst ],
                                   'second': [ s.toJson() for s in specsSecond ] } )

def _analyticDiagnostics( s, profiles ):
   diagnostics = { 'L': s.L, 'tailNorm': s.tailNorm }
   if profiles[ -1 ].truncated or s.tailNorm > causallib.TAIL_NORM_LIMIT:
      diagnostics[ 'truncationWarning' ] = True
   diagnostics[ 'warnings' ] = list( s.warnings )
   return diagnostics

def aceBackdoorAnalytic( s, a, b, h, xstar ):
   '''
   E_s X_b(t+h) = PhiH_ba(1) x* for a back-door admissible S; admissibility is
   the caller's responsibility.
   '''
   ia, ib = s.index( a ), s.index( b )
   profiles = predictorProfiles( s, h )
   value = profiles[ -1 ].PhiH1[ ib, ia ] * xstar
   return AceResult( value, 0.0, ANALYTIC_BACK_DOOR, b, h, a=a,
                     diagnostics=_analyticDiagnostics( s, profiles ) )

def aceFrontdoorAnalytic( s, a, b, C, h, xstar ):
   '''
   Chain composition through the mediators C:
   sum_{j=1}^{h-1} sum_{c in C} Phi^(h-j)_bc(1) Phi^(j)_ca(1) x*.
   Exact for h = 2; longer horizons are flagged as heuristic.
   '''
   C = sorted( C )
   if not C:
      raise inputError( 'The front-door formula needs a non-empty mediator set' )
   if a in C or b in C:
      raise inputError( 'Mediators must differ from cause and effect' )
   ia, ib = s.index( a ), s.index( b )
   ic = s.indices( C )
   if h < 1:
      raise inputError( f'Horizon must be at least 1, got {h}' )
   if h < 2:
      message = 'No mediated effect at horizon 1; the front-door value is 0'
      log.warning( message )
      return AceResult( 0.0, 0.0, ANALYTIC_FRONT_DOOR, b, h, a=a,
                        diagnostics={ 'L': s.L, 'tailNorm': s.tailNorm,
                                      'warnings': [ message ] } )
   profiles = predictorProfiles( s, h - 1 )
   value = 0.0
   for j in range( 1, h ):
      outer = profiles[ h - j - 1 ].PhiH1
      inner = profiles[ j - 1 ].PhiH1
      value += float( outer[ ib, ic ] @ inner[ ic, ia ] )
   diagnostics = _analyticDiagnostics( s, profiles )
   if h > 2:
      message = 'chain-case formula beyond horizon 2 is heuristic'
      log.warning( message )
      diagnostics[ 'chainCaseFormula' ] = True
      diagnostics[ 'warnings' ].append( message )
   return AceResult( value * xstar, 0.0, ANALYTIC_FRONT_DOOR, b, h, a=a,
                     diagnostics=diagnostics )

def acePluginEq1( s, a, b, h, strategy, outerReps, seed,
                  burnIn=causallib.DEFAULT_BURN_IN, workers=1 ):
   '''
   Plug-in evaluation of the identifying formula over X_S: the outer
   expectation runs over simulated observational paths of the representation,
   X_a(t) is replaced by the strategy's value (its mean for random
   strategies), and the inner expectation is the h-step linear predictor.
   '''
   if outerReps < 2:
      raise inputError( f'Need at least 2 outer replications, got {outerReps}' )
   ia, ib = s.index( a ), s.index( b )
   escaping = sorted( set( strategy.C ) - set( s.S ) )
   if escaping:
      raise inputError( f'Conditioning set escapes S: {", ".join( escaping )}' )
   profiles = predictorProfiles( s, h )
   weights = profiles[ -1 ].PhiH
   L = s.L

   if isinstance( strategy, RandomShift ):
      strategy = Conditional( strategy.C, strategy.window, strategy.coeffs,
                              strategy.intercept )
   model = s.toVarModel()
   spec = InterventionSpec( a, L - 1, strategy )
   _checkSimulation( model, L, outerReps, seed, burnIn, [ spec ] )
   moments = RunningMoments()
   for block in _chunkedPaths( model, L, outerReps, seed, burnIn, [ spec ], workers ):
      # row L-1 is time t; lag j weights X_S(t+1-j)
      prediction = sum( block[ :, L - j, : ] @ weights[ j - 1 ][ ib ]
                        for j in range( 1, L + 1 ) )
      moments.update( prediction )
   diagnostics = _analyticDiagnostics( s, profiles )
   diagnostics.update( { 'reps': outerReps, 'seed': seed, 'burnIn': burnIn,
                         'strategy': strategy.toJson() } )
   log.info( 'plug-in E_s X_%s(t+%d) = %.6g +- %.3g', b, h, moments.mean,
             moments.stderr )
   return AceResult( moments.mean, moments.stderr, PLUGIN_EQ1, b, h, a=a,
                     diagnostics=diagnostics )

class ComparisonReport:
   def __init__( self, analytic, oracle, k, floor ):
      self.analytic = analytic
      self.oracle = oracle
      self.k = k
      self.floor = floor
      self.delta = analytic.value - oracle.value
      self.scale = max( oracle.stderr, floor )
      self.z = self.delta / self.scale
      self.passed = abs( self.delta ) <= k * self.scale

   def toJson( self ):
      return {
         'pass': self.passed,
         'delta': self.delta,
         'z': self.z,
         'k': self.k,
         'floor': self.floor,
         'analytic': self.analytic.toJson(),
         'oracle': self.oracle.toJson(),
      }

def compare( analytic, oracle, k=causallib.COMPARE_K, floor=causallib.COMPARE_FLOOR ):
   if analytic.h != oracle.h:
      raise inputError( f'Cannot compare horizons {analytic.h} and {oracle.h}' )
   if analytic.b != oracle.b:
      raise inputError( f'Cannot compare effects on {analytic.b!r} and {oracle.b!r}' )
   report = ComparisonReport( analytic, oracle, k, floor )
   log.info( 'comparison delta=%.3g z=%.3g pass=%s', report.delta, report.z,
             report.passed )
   return report
