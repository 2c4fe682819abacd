# Use of this source code is governed by the Apache License 2.0
# that can be found in the LICENSE file.

'''
Graph-level causal queries on mixed graphs: the conditions of the global
Granger-causal Markov property, noncausality at all horizons, the back-door
and front-door identification criteria, and a search for admissible sets.

All criteria are sufficient conditions. Each report lists the sub-conditions
it checked, with a witness walk for every one that failed.
'''

import itertools
import logging

import networkx as nx

from . import graph
from .causallib import inputError
from .separation import FirstEdge, LastEdge, WalkQuery, existsConnectingWalk

log = logging.getLogger( __name__ )

BACK_DOOR = 'backdoor'
FRONT_DOOR = 'frontdoor'
CRITERIA = ( BACK_DOOR, FRONT_DOOR )

class CriterionReport:
   def __init__( self, name ):
      self.name = name
      self.conditions = []

   @property
   def holds( self ):
      return all( c[ 'holds' ] for c in self.conditions )

   @property
   def violations( self ):
      return [ c[ 'witness' ] for c in self.conditions if not c[ 'holds' ] ]

   def addCondition( self, name, holds, witness=None, query=None ):
      condition = { 'name': name, 'holds': holds, 'witness': witness }
      if query is not None:
         condition[ 'query' ] = query
      self.conditions.append( condition )
      return holds

   def addWalkCondition( self, g, name, q ):
      verdict = existsConnectingWalk( g, q )
      return self.addCondition( name, not verdict.connected, verdict.witness,
                                q.toJson() )

   def toJson( self ):
      return {
         'criterion': self.name,
         'holds': self.holds,
         'violations': self.violations,
         'conditions': self.conditions,
      }

   def __repr__( self ):
      return f'CriterionReport({self.name}, holds={self.holds})'

def _checkDisjoint( g, A, B, C ):
   A, B, C = frozenset( A ), frozenset( B ), frozenset( C )
   for name, nodes in ( ( 'A', A ), ( 'B', B ), ( 'C', C ) ):
      g.checkNodes( nodes, f'node in {name}' )
   if not A or not B:
      raise inputError( 'A and B must be non-empty' )
   for ( n1, s1 ), ( n2, s2 ) in itertools.combinations(
         ( ( 'A', A ), ( 'B', B ), ( 'C', C ) ), 2 ):
      if s1 & s2:
         raise inputError( f'{n1} and {n2} must be disjoint, both contain '
                           f'{", ".join( sorted( s1 & s2 ) )}' )
   return A, B, C

def grangerNoncausal( g, A, B, C ):
   '''
   Every B-pointing walk between A and B is m-blocked given B | C; under the
   global Markov property X_A is then Granger-noncausal for X_B with respect
   to X_{A|B|C}.
   '''
   A, B, C = _checkDisjoint( g, A, B, C )
   report = CriterionReport( 'granger-noncausal' )
   q = WalkQuery( A, B, B | C, last=LastEdge.POINTING_INTO_TARGET )
   report.addWalkCondition( g, 'B-pointing walks blocked given B|C', q )
   return report

def contemporaneouslyIndependent( g, A, B, C ):
   A, B, C = _checkDisjoint( g, A, B, C )
   report = CriterionReport( 'contemporaneously-independent' )
   joined = sorted( ( u, v ) for u, v in g.dashed
                    if ( u in A and v in B ) or ( u in B and v in A ) )
   witness = None
   if joined:
      u, v = joined[ 0 ]
      witness = [ u, '---', v ] if u in A else [ v, '---', u ]
   report.addCondition( 'no dashed edge between A and B', not joined, witness )
   q = WalkQuery( A, B, A | B | C, first=FirstEdge.ARROWHEAD_AT_SOURCE,
                  last=LastEdge.POINTING_INTO_TARGET )
   report.addWalkCondition( g, 'bi-pointing walks blocked given A|B|C', q )
   return report

def noncausalAllHorizons( g, A, B, C ):
   '''
   Every an(B)-pointing walk between A and an(B) is m-blocked given B | C.
   Targets range over all of an(B), nodes of C included.
   '''
   A, B, C = _checkDisjoint( g, A, B, C )
   report = CriterionReport( 'noncausal-all-horizons' )
   q = WalkQuery( A, graph.ancestors( g, B ), B | C,
                  last=LastEdge.POINTING_INTO_TARGET, allowSourceEqualsTarget=True )
   report.addWalkCondition( g, 'an(B)-pointing walks blocked given B|C', q )
   return report

def _addPointingBackDoor( report, g, sources, targets, S, label ):
   '''
   Back-door walks from `sources` that point into `targets`, split into walks
   ending outside the source set and walks returning into it, so that both
   readings of the criterion can be audited separately.
   '''
   outside = targets - sources
   if outside:
      q = WalkQuery( sources, outside, S, first=FirstEdge.BACK_DOOR_ONLY,
                     last=LastEdge.POINTING_INTO_TARGET )
      report.addWalkCondition( g, f'{label}: walks into targets outside the sources', q )
   returning = targets & sources
   if returning:
      q = WalkQuery( sources, returning, S, first=FirstEdge.BACK_DOOR_ONLY,
                     last=LastEdge.POINTING_INTO_TARGET, allowSourceEqualsTarget=True )
      report.addWalkCondition( g, f'{label}: walks returning into the sources', q )

def _checkEffectNodes( g, a, b, S ):
   S = frozenset( S )
   g.checkNodes( [ a, b ] )
   g.checkNodes( S, 'node in S' )
   if a == b:
      raise inputError( 'Cause and effect node must differ' )
   if a not in S or b not in S:
      raise inputError( f'S must contain both {a!r} and {b!r}' )
   return S

def backdoorAdmissible( g, a, b, S ):
   '''
   All an(b)-pointing back-door walks between a and an(b) are m-blocked given
   S. Walks from a back to a are checked as well whenever a is in an(b).
   '''
   S = _checkEffectNodes( g, a, b, S )
   report = CriterionReport( 'backdoor' )
   _addPointingBackDoor( report, g, frozenset( [ a ] ),
                         graph.ancestors( g, [ b ] ), S, 'an(b)-pointing back-door' )
   return report

def _directedWalkAvoiding( g, a, b, C ):
   dag = g.directedGraph()
   dag.remove_nodes_from( C )
   try:
      path = nx.shortest_path( dag, a, b )
   except nx.NetworkXNoPath:
      return None
   walk = [ path[ 0 ] ]
   for node in path[ 1: ]:
      walk += [ '->', node ]
   return walk

def frontdoorAdmissible( g, a, b, S ):
   S = _checkEffectNodes( g, a, b, S )
   C = S - { a, b }
   if not C:
      raise inputError( 'The front-door criterion needs a non-empty mediator set '
                        'S \\ {a, b}' )
   report = CriterionReport( 'frontdoor' )
   # Every intermediate on a directed walk is a non-collider, so a directed
   # walk is blocked given C exactly when it meets C.
   witness = _directedWalkAvoiding( g, a, b, C )
   report.addCondition( 'directed walks from a to b blocked given C',
                        witness is None, witness )
   _addPointingBackDoor( report, g, frozenset( [ a ] ), graph.ancestors( g, C ), S,
                         'an(C)-pointing back-door from a' )
   _addPointingBackDoor( report, g, C, graph.ancestors( g, [ b ] ), S,
                         'an(b)-pointing back-door from C' )
   return report

def noCausalEffect( g, a, b, h ):
   '''
   Graphical null effects: X_a(t) has no effect on X_b(t+h) for any h when a is
   not an ancestor of b, and none on X_b(t+1) when the edge a -> b is absent.
   '''
   g.checkNodes( [ a, b ] )
   if h < 1:
      raise inputError( f'Horizon must be at least 1, got {h}' )
   report = CriterionReport( 'no-causal-effect' )
   if h == 1:
      # an edge a -> b makes a an ancestor of b, so this one check covers both
      noEdge = not g.hasDirected( a, b )
      report.addCondition( 'no edge a -> b at lead one', noEdge,
                           None if noEdge else [ a, '->', b ] )
      return report
   notAncestor = a not in graph.ancestors( g, [ b ] )
   witness = None
   if not notAncestor:
      witness = _directedWalkAvoiding( g, a, b, frozenset() ) if a != b else [ a ]
   report.addCondition( 'a is not an ancestor of b', notAncestor, witness )
   return report

class AdmissibleSetRequest:
   def __init__( self, a, b, criterion=BACK_DOOR, mustInclude=frozenset(),
                 forbidden=None, maxSize=None ):
      self.a = a
      self.b = b
      self.criterion = criterion
      self.mustInclude = frozenset( mustInclude ) | { a, b }
      self.forbidden = None if forbidden is None else frozenset( forbidden )
      self.maxSize = maxSize

   def validate( self, g ):
      '''
      Check the request against g and return a copy with the latent nodes as
      default forbidden set and the node count as default size bound.
      '''
      g.checkNodes( [ self.a, self.b ] )
      g.checkNodes( self.mustInclude, 'required node' )
      forbidden = g.latentIds() if self.forbidden is None else self.forbidden
      g.checkNodes( forbidden, 'forbidden node' )
      if self.a == self.b:
         raise inputError( 'Cause and effect node must differ' )
      if self.criterion not in CRITERIA:
         raise inputError( f'Unknown criterion {self.criterion!r}' )
      clash = self.mustInclude & forbidden
      if clash:
         raise inputError( f'Nodes both required and forbidden: '
                           f'{", ".join( sorted( clash ) )}' )
      maxSize = len( g.nodeIds() ) if self.maxSize is None else self.maxSize
      return AdmissibleSetRequest( self.a, self.b, self.criterion, self.mustInclude,
                                   forbidden, maxSize )

def _admissible( g, req, S ):
   if req.criterion == BACK_DOOR:
      return backdoorAdmissible( g, req.a, req.b, S ).holds
   if not S - { req.a, req.b }:
      return False
   return frontdoorAdmissible( g, req.a, req.b, S ).holds

def findAdmissibleSets( g, req ):
   '''
   All inclusion-minimal admissible sets between mustInclude and the
   non-forbidden nodes, by exhaustive enumeration in order of size and then
   lexicographically. Exponential in the number of candidate nodes.
   '''
   req = req.validate( g )
   candidates = sorted( g.nodeIds() - req.forbidden - req.mustInclude )
   found = []
   for size in range( 0, len( candidates ) + 1 ):
      if len( req.mustInclude ) + size > req.maxSize:
         break
      for extra in itertools.combinations( candidates, size ):
         S = req.mustInclude | frozenset( extra )
         if any( f <= S for f in found ):
            continue
         if _admissible( g, req, S ):
            log.debug( 'admissible set %s', sorted( S ) )
            found.append( S )
   return found
