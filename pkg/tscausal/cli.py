# Use of this source code is governed by the Apache License 2.0
# that can be found in the LICENSE file.

'''
Command-line front end. Every run prints one JSON document carrying a
`manifest` with the command, its parameters and the SHA-256 of every input
file. Exit codes follow CAUSAL_RESULT.
'''

import argparse
import logging
import os
import sys

import numpy as np

from . import causallib, criteria, graph, intervene, separation, varmodel
from .causallib import CAUSAL_MESSAGE, CAUSAL_RESULT, CausalToolsException, inputError

log = logging.getLogger( __name__ )

GROUPS = ( 'graph', 'var', 'ace' )
INPUT_FILE_OPTIONS = ( 'config', 'graph', 'var', 'intervention', 'against', 'csv' )
UNRECORDED_OPTIONS = ( 'func', 'out', 'verbose', 'workers', 'group', 'command' )

class CliParser( argparse.ArgumentParser ):
   '''
   Usage errors are input errors: usage goes to stderr and the caller still
   gets a JSON diagnostic and exit code 1.
   '''
   def error( self, message ):
      self.print_usage( sys.stderr )
      raise inputError( f'{self.prog}: {message}' )

class Settings:
   '''
   Run settings: module defaults, overridden by a --config file, overridden
   by explicit flags.
   '''
   KEYS = ( 'tol', 'lag', 'burnIn', 'reps', 'seed', 'k', 'floor', 'workers' )

   def __init__( self, args ):
      self.tol = causallib.DEFAULT_TOL
      self.lag = None
      self.burnIn = causallib.DEFAULT_BURN_IN
      self.reps = causallib.DEFAULT_REPS
      self.seed = causallib.DEFAULT_SEED
      self.k = causallib.COMPARE_K
      self.floor = causallib.COMPARE_FLOOR
      self.workers = 1
      if getattr( args, 'config', None ):
         for key, value in causallib.loadConfig( args.config ).items():
            setattr( self, key, value )
      for key in self.KEYS:
         value = getattr( args, key, None )
         if value is not None:
            setattr( self, key, value )

   def lagFor( self, m ):
      return self.lag if self.lag is not None else causallib.defaultLag( m.p )

   def toJson( self ):
      return { key: getattr( self, key ) for key in self.KEYS if key != 'workers' }

def manifest( args, settings=None ):
   inputs = []
   for option in INPUT_FILE_OPTIONS:
      path = getattr( args, option, None )
      if path and os.path.isfile( path ) and not ( option == 'csv' and
                                                   args.command == 'simulate' ):
         inputs.append( { 'option': option, 'path': path,
                          'sha256': causallib.sha256sum( path ) } )
   parameters = { key: value for key, value in sorted( vars( args ).items() )
                  if key not in UNRECORDED_OPTIONS and key not in INPUT_FILE_OPTIONS
                  and value is not None }
   result = {
      'tool': causallib.TOOL_NAME,
      'version': causallib.TOOL_VERSION,
      'command': f'{args.group} {args.command}',
      'parameters': parameters,
      'inputs': inputs,
   }
   if settings is not None:
      result[ 'settings' ] = settings.toJson()
   return result

# graph group

def loadGraphArg( args ):
   if args.graph and args.edges is not None:
      raise inputError( 'Use either --graph or --edges, not both' )
   if args.graph:
      if args.latent:
         raise inputError( '--latent only applies to --edges' )
      return graph.loadGraph( args.graph )
   if args.edges is None:
      raise inputError( 'One of --graph or --edges is required' )
   return graph.graphFromEdgeList( args.edges, causallib.parseNodeSet( args.latent ) )

def nodeArg( value, option ):
   if not value:
      raise inputError( f'{option} is required' )
   return value

def nodeSetArg( value, option ):
   if value is None:
      raise inputError( f'{option} is required' )
   return causallib.parseNodeSet( value )

def graphAncestors( args, settings ):
   g = loadGraphArg( args )
   A = nodeSetArg( args.a, '--a' )
   return { 'ancestors': sorted( graph.ancestors( g, A ) ) }

def graphMsep( args, settings ):
   g = loadGraphArg( args )
   verdict = separation.mSeparationVerdict(
      g, nodeSetArg( args.a, '--a' ), nodeSetArg( args.b, '--b' ),
      causallib.parseNodeSet( args.given ) )
   return { 'separated': not verdict.connected, 'witness': verdict.witness }

def _setCriterion( function ):
   def handler( args, settings ):
      g = loadGraphArg( args )
      return function( g, nodeSetArg( args.a, '--a' ), nodeSetArg( args.b, '--b' ),
                       causallib.parseNodeSet( args.c ) ).toJson()
   return handler

def _effectCriterion( function ):
   def handler( args, settings ):
      g = loadGraphArg( args )
      return function( g, nodeArg( args.a, '--a' ), nodeArg( args.b, '--b' ),
                       nodeSetArg( args.s, '--s' ) ).toJson()
   return handler

def graphFindSet( args, settings ):
   g = loadGraphArg( args )
   forbidden = None
   if args.forbid is not None:
      forbidden = causallib.parseNodeSet( args.forbid )
   req = criteria.AdmissibleSetRequest(
      nodeArg( args.a, '--a' ), nodeArg( args.b, '--b' ), args.criterion,
      causallib.parseNodeSet( args.include ), forbidden, args.max_size )
   sets = criteria.findAdmissibleSets( g, req )
   return { 'criterion': args.criterion, 'sets': [ sorted( S ) for S in sets ] }

def graphNoEffect( args, settings ):
   g = loadGraphArg( args )
   return criteria.noCausalEffect( g, nodeArg( args.a, '--a' ),
                                   nodeArg( args.b, '--b' ), args.h ).toJson()

# var group

def loadVarArg( args ):
   if not args.var:
      raise inputError( '--var is required' )
   return varmodel.loadVar( args.var )

def subprocessArg( args, settings, m ):
   S = causallib.parseNodeList( args.s ) if args.s else m.labels
   return varmodel.subprocessAr( m, S, settings.lagFor( m ), settings.tol )

def varStationary( args, settings ):
   return { 'spectralRadius': varmodel.checkStationary( loadVarArg( args ) ) }

def varSubar( args, settings ):
   m = loadVarArg( args )
   return subprocessArg( args, settings, m ).toJson()

def varPredictor( args, settings ):
   m = loadVarArg( args )
   s = subprocessArg( args, settings, m )
   result = varmodel.predictorCoeffs( s, args.h ).toJson()
   result[ 'warnings' ] = s.warnings
   return result

def varDiagram( args, settings ):
   return graph.toDocument( varmodel.pathDiagram( loadVarArg( args ), settings.tol ) )

def _numericCheck( function ):
   def handler( args, settings ):
      m = loadVarArg( args )
      s = subprocessArg( args, settings, m )
      A = nodeSetArg( args.a, '--a' )
      B = nodeSetArg( args.b, '--b' )
      return { 'holds': function( s, A, B, settings.tol ), 'S': s.S,
               'tailNorm': s.tailNorm }
   return handler

def varHorizon( args, settings ):
   m = loadVarArg( args )
   s = subprocessArg( args, settings, m )
   A = nodeSetArg( args.a, '--a' )
   B = nodeSetArg( args.b, '--b' )
   holds = varmodel.grangerNoncausalHorizonNumeric( s, A, B, args.h, settings.tol )
   return { 'holds': holds, 'h': args.h, 'S': s.S, 'warnings': s.warnings }

def varSimulate( args, settings ):
   m = loadVarArg( args )
   if not args.csv:
      raise inputError( '--csv is required' )
   data = intervene.simulateObservational( m, args.T, settings.seed, settings.burnIn )
   try:
      data.toCsv( args.csv )
   except OSError as e:
      raise inputError( f'Error writing {args.csv}: {e}', location=args.csv )
   return { 'csv': args.csv, 'T': data.T, 'labels': data.labels,
            'sha256': causallib.sha256sum( args.csv ) }

def varFit( args, settings ):
   if not args.csv:
      raise inputError( '--csv is required' )
   data = varmodel.loadCsv( args.csv )
   if args.s:
      data = data.select( causallib.parseNodeList( args.s ) )
   return varmodel.olsFit( data, args.p ).toDocument()

# ace group

def strategyArg( args, target ):
   '''
   An atomic strategy from --x, or the single strategy of an --intervention
   file aimed at `target`.
   '''
   if args.intervention:
      specs = intervene.loadSpecs( args.intervention )
      if len( specs ) != 1 or specs[ 0 ].target != target:
         raise inputError( f'--intervention must hold one spec targeting {target!r}' )
      return specs[ 0 ].strategy
   if args.x is None:
      raise inputError( 'One of --x or --intervention is required' )
   return intervene.Atomic( args.x )

def specsArg( args ):
   if args.intervention:
      return intervene.loadSpecs( args.intervention )
   if args.x is None:
      raise inputError( 'One of --x or --intervention is required' )
   return [ intervene.InterventionSpec( nodeArg( args.a, '--a' ), 0,
                                        intervene.Atomic( args.x ) ) ]

def analyticAce( args, settings, m ):
   a, b = nodeArg( args.a, '--a' ), nodeArg( args.b, '--b' )
   if args.x is None:
      raise inputError( '--x is required' )
   s = subprocessArg( args, settings, m )
   if args.c:
      C = causallib.parseNodeSet( args.c )
      return intervene.aceFrontdoorAnalytic( s, a, b, C, args.h, args.x )
   return intervene.aceBackdoorAnalytic( s, a, b, args.h, args.x )

def aceAnalytic( args, settings ):
   return analyticAce( args, settings, loadVarArg( args ) ).toJson()

def acePlugin( args, settings ):
   m = loadVarArg( args )
   a, b = nodeArg( args.a, '--a' ), nodeArg( args.b, '--b' )
   s = subprocessArg( args, settings, m )
   return intervene.acePluginEq1( s, a, b, args.h, strategyArg( args, a ),
                                  settings.reps, settings.seed, settings.burnIn,
                                  settings.workers ).toJson()

def aceOracle( args, settings ):
   m = loadVarArg( args )
   return intervene.simulateInterventional( m, specsArg( args ), nodeArg( args.b, '--b' ),
                                            args.h, settings.reps, settings.seed,
                                            settings.burnIn, settings.workers ).toJson()

def aceCompare( args, settings ):
   m = loadVarArg( args )
   analytic = analyticAce( args, settings, m )
   spec = intervene.InterventionSpec( args.a, 0, intervene.Atomic( args.x ) )
   oracle = intervene.simulateInterventional( m, [ spec ], args.b, args.h,
                                              settings.reps, settings.seed,
                                              settings.burnIn, settings.workers )
   return intervene.compare( analytic, oracle, settings.k, settings.floor ).toJson()

def aceContrast( args, settings ):
   m = loadVarArg( args )
   if not args.intervention or not args.against:
      raise inputError( '--intervention and --against are both required' )
   return intervene.simulateContrast( m, intervene.loadSpecs( args.intervention ),
                                      intervene.loadSpecs( args.against ),
                                      nodeArg( args.b, '--b' ), args.h, settings.reps,
                                      settings.seed, settings.burnIn,
                                      settings.workers ).toJson()

def _addCommon( parser ):
   add = parser.add_argument
   add( '--config', metavar='RUN.yaml', help='YAML file overriding default settings' )
   add( '--out', metavar='FILE', help='Write the JSON document here instead of stdout' )
   add( '-v', '--verbose', action='store_true', help='Log debugging output to stderr' )

def _addGraphSource( parser ):
   add = parser.add_argument
   add( '--graph', metavar='GRAPH.json', help='Mixed graph document' )
   add( '--edges', metavar='EDGES', help='Inline graph, e.g. "d->a, c---d"' )
   add( '--latent', metavar='NODES', help='Unobserved nodes of an inline graph' )

def _addVarSource( parser, subset=True ):
   parser.add_argument( '--var', metavar='VAR.json', help='VAR model document' )
   if subset:
      parser.add_argument( '--s', metavar='NODES',
                           help='Subprocess components (default: all)' )
      parser.add_argument( '--lag', type=int, help='Truncation lag L' )
   parser.add_argument( '--tol', type=float, help='Structural-zero tolerance' )

def _addMonteCarlo( parser ):
   add = parser.add_argument
   add( '--reps', type=int, help='Number of replications' )
   add( '--seed', type=int, help='Random seed' )
   add( '--burn-in', dest='burnIn', type=int, help='Samples discarded per path' )
   add( '--workers', type=int, help='Simulation threads; results do not depend on it' )

def _command( subparsers, name, func, helpText ):
   parser = subparsers.add_parser( name, help=helpText )
   parser.set_defaults( func=func, command=name )
   _addCommon( parser )
   return parser

def _graphCommands( subparsers ):
   p = _command( subparsers, 'ancestors', graphAncestors, 'Reflexive ancestors an(A)' )
   _addGraphSource( p )
   p.add_argument( '--a', metavar='NODES' )

   p = _command( subparsers, 'msep', graphMsep, 'm-separation of A and B given S' )
   _addGraphSource( p )
   p.add_argument( '--a', metavar='NODES' )
   p.add_argument( '--b', metavar='NODES' )
   p.add_argument( '--given', metavar='NODES', default='' )

   for name, function, helpText in (
         ( 'granger', criteria.grangerNoncausal, 'Graphical Granger noncausality' ),
         ( 'contemp', criteria.contemporaneouslyIndependent,
           'Graphical contemporaneous independence' ),
         ( 'noncausal-inf', criteria.noncausalAllHorizons,
           'Noncausality at all horizons' ) ):
      p = _command( subparsers, name, _setCriterion( function ), helpText )
      _addGraphSource( p )
      p.add_argument( '--a', metavar='NODES' )
      p.add_argument( '--b', metavar='NODES' )
      p.add_argument( '--c', metavar='NODES', default='' )

   for name, function, helpText in (
         ( 'backdoor', criteria.backdoorAdmissible, 'Back-door criterion for S' ),
         ( 'frontdoor', criteria.frontdoorAdmissible, 'Front-door criterion for S' ) ):
      p = _command( subparsers, name, _effectCriterion( function ), helpText )
      _addGraphSource( p )
      p.add_argument( '--a', metavar='NODE' )
      p.add_argument( '--b', metavar='NODE' )
      p.add_argument( '--s', metavar='NODES' )

   p = _command( subparsers, 'find-set', graphFindSet, 'Minimal admissible sets' )
   _addGraphSource( p )
   p.add_argument( '--a', metavar='NODE' )
   p.add_argument( '--b', metavar='NODE' )
   p.add_argument( '--criterion', choices=criteria.CRITERIA, default=criteria.BACK_DOOR )
   p.add_argument( '--include', metavar='NODES', default='',
                   help='Nodes every set must contain' )
   p.add_argument( '--forbid', metavar='NODES',
                   help='Nodes no set may contain (default: the latent nodes)' )
   p.add_argument( '--max-size', dest='max_size', type=int )

   p = _command( subparsers, 'no-effect', graphNoEffect, 'Graphical null effect' )
   _addGraphSource( p )
   p.add_argument( '--a', metavar='NODE' )
   p.add_argument( '--b', metavar='NODE' )
   p.add_argument( '--h', type=int, default=1 )

def _varCommands( subparsers ):
   p = _command( subparsers, 'stationary', varStationary, 'Companion spectral radius' )
   _addVarSource( p, subset=False )

   p = _command( subparsers, 'subar', varSubar, 'Autoregressive representation of X_S' )
   _addVarSource( p )

   p = _command( subparsers, 'predictor', varPredictor, 'h-step predictor coefficients' )
   _addVarSource( p )
   p.add_argument( '--h', type=int, default=1 )

   p = _command( subparsers, 'diagram', varDiagram, 'Path diagram of the model' )
   _addVarSource( p, subset=False )

   for name, function, helpText in (
         ( 'granger', varmodel.grangerNoncausalNumeric, 'Coefficient Granger check' ),
         ( 'contemp', varmodel.contempIndependentNumeric,
           'Innovation covariance check' ) ):
      p = _command( subparsers, name, _numericCheck( function ), helpText )
      _addVarSource( p )
      p.add_argument( '--a', metavar='NODES' )
      p.add_argument( '--b', metavar='NODES' )

   p = _command( subparsers, 'horizon', varHorizon, 'Granger check up to horizon h' )
   _addVarSource( p )
   p.add_argument( '--a', metavar='NODES' )
   p.add_argument( '--b', metavar='NODES' )
   p.add_argument( '--h', type=int, default=1 )

   p = _command( subparsers, 'simulate', varSimulate, 'Simulate observational data' )
   _addVarSource( p, subset=False )
   p.add_argument( '--T', type=int, default=1000, help='Sample length' )
   p.add_argument( '--csv', metavar='DATA.csv', help='Output CSV file' )
   p.add_argument( '--seed', type=int )
   p.add_argument( '--burn-in', dest='burnIn', type=int )

   p = _command( subparsers, 'fit', varFit, 'Least-squares VAR fit' )
   p.add_argument( '--csv', metavar='DATA.csv', help='Input CSV file' )
   p.add_argument( '--s', metavar='NODES', help='Columns to fit (default: all)' )
   p.add_argument( '--p', type=int, default=1, help='Lag order' )

def _aceCommands( subparsers ):
   def effect( p ):
      _addVarSource( p )
      p.add_argument( '--a', metavar='NODE' )
      p.add_argument( '--b', metavar='NODE' )
      p.add_argument( '--h', type=int, default=1 )
      p.add_argument( '--x', type=float, help='Atomic intervention value' )

   p = _command( subparsers, 'analytic', aceAnalytic, 'Analytic back- or front-door ACE' )
   effect( p )
   p.add_argument( '--c', metavar='NODES', help='Mediators (selects the front door)' )

   p = _command( subparsers, 'plugin', acePlugin, 'Plug-in ACE over X_S' )
   effect( p )
   p.add_argument( '--intervention', metavar='SPEC.json' )
   _addMonteCarlo( p )

   p = _command( subparsers, 'oracle', aceOracle, 'Monte Carlo ACE on the full model' )
   effect( p )
   p.add_argument( '--intervention', metavar='SPEC.json' )
   _addMonteCarlo( p )

   p = _command( subparsers, 'compare', aceCompare, 'Analytic ACE against the oracle' )
   effect( p )
   p.add_argument( '--c', metavar='NODES', help='Mediators (selects the front door)' )
   p.add_argument( '--k', type=float )
   p.add_argument( '--floor', type=float )
   _addMonteCarlo( p )

   p = _command( subparsers, 'contrast', aceContrast, 'Paired difference of two regimes' )
   _addVarSource( p, subset=False )
   p.add_argument( '--b', metavar='NODE' )
   p.add_argument( '--h', type=int, default=1 )
   p.add_argument( '--intervention', metavar='SPEC.json' )
   p.add_argument( '--against', metavar='SPEC.json' )
   _addMonteCarlo( p )

def buildParser():
   helpText = 'Causal identification in graphical time series models.'
   parser = CliParser( prog='ts-causal', description=helpText )
   groups = parser.add_subparsers( dest='group', metavar='{graph,var,ace}' )
   groups.required = True
   for name, populate, helpText in (
         ( 'graph', _graphCommands, 'Queries on mixed graphs' ),
         ( 'var', _varCommands, 'VAR numerics' ),
         ( 'ace', _aceCommands, 'Average causal effects' ) ):
      group = groups.add_parser( name, help=helpText )
      commands = group.add_subparsers( dest='command' )
      commands.required = True
      populate( commands )
   return parser

def _configureLogging( verbose ):
   root = logging.getLogger()
   for handler in list( root.handlers ):
      root.removeHandler( handler )
   logging.basicConfig( stream=sys.stderr,
                        level=logging.DEBUG if verbose else logging.WARNING,
                        format='%(levelname)s %(name)s: %(message)s' )

def _emit( document, out=None ):
   text = causallib.dumpJson( document )
   if out:
      with open( out, 'w' ) as f:
         f.write( text )
   else:
      sys.stdout.write( text )

def run( argv ):
   '''
   Parse argv, answer the query and emit the JSON document. Returns the exit
   code.
   '''
   args = None
   settings = None
   try:
      args = buildParser().parse_args( argv )
      _configureLogging( args.verbose )
      settings = Settings( args )
      document = args.func( args, settings )
      document[ 'manifest' ] = manifest( args, settings )
      try:
         _emit( document, args.out )
      except OSError as e:
         raise inputError( f'Error writing {args.out}: {e}', location=args.out )
      return CAUSAL_RESULT.SUCCESS
   except CausalToolsException as e:
      code, error = e.code, e.toJson()
   except np.linalg.LinAlgError as e:
      code = CAUSAL_RESULT.NUMERICAL_FAILURE
      error = { 'code': code, 'message': f'Linear algebra failure: {e}' }
   except Exception as e:
      log.debug( 'unexpected failure', exc_info=True )
      code = CAUSAL_RESULT.INTERNAL_ERROR
      error = { 'code': code,
                'message': f'{CAUSAL_MESSAGE[ code ]} {type( e ).__name__}: {e}' }
   print( error[ 'message' ], file=sys.stderr )
   document = { 'error': error }
   if args is not None:
      document[ 'manifest' ] = manifest( args, settings )
   _emit( document )
   return code

def main( group=None ):
   argv = sys.argv[ 1: ]
   if group is not None:
      argv = [ group ] + argv
   sys.exit( run( argv ) )

def graphMain():
   main( 'graph' )

def varMain():
   main( 'var' )

def aceMain():
   main( 'ace' )

if __name__ == '__main__':
   main()
