# Use of this source code is governed by the Apache License 2.0
# that can be found in the LICENSE file.

'''
m-connection over walks in mixed graphs.

A walk may repeat nodes and edges. An intermediate occurrence of a node is an
m-collider when both adjacent edge ends at it are arrowheads or dashed tails,
otherwise an m-non-collider; endpoints are neither. A walk is m-connecting
given S when every non-collider occurrence lies outside S and every collider
occurrence lies inside S.

The engine decides connection by reachability over states ( node, mark by
which the node was entered ). The state graph is finite, so every query
terminates, and since the admissible continuations of a walk depend only on
its current state the answer is exact for walks of any length.
'''

import collections
import logging

from .causallib import inputError

log = logging.getLogger( __name__ )

class Mark:
   TAIL = 'tail'
   ARROWHEAD = 'arrowhead'
   DASHED_TAIL = 'dashed-tail'

class Occurrence:
   COLLIDER = 'collider'
   NON_COLLIDER = 'non-collider'

class FirstEdge:
   ANY = 'any'
   BACK_DOOR_ONLY = 'back-door'
   FRONT_DOOR_ONLY = 'front-door'
   ARROWHEAD_AT_SOURCE = 'arrowhead-at-source'

class LastEdge:
   ANY = 'any'
   POINTING_INTO_TARGET = 'pointing'

FIRST_EDGE_CONSTRAINTS = ( FirstEdge.ANY, FirstEdge.BACK_DOOR_ONLY,
                           FirstEdge.FRONT_DOOR_ONLY, FirstEdge.ARROWHEAD_AT_SOURCE )
LAST_EDGE_CONSTRAINTS = ( LastEdge.ANY, LastEdge.POINTING_INTO_TARGET )

# Edge glyphs as read from the current node towards the next one.
GLYPH_OUT = '->'
GLYPH_IN = '<-'
GLYPH_DASHED = '---'

def classifyOccurrence( incoming, outgoing ):
   '''
   Classify an intermediate occurrence from the marks of its two adjacent edge
   ends at that node.
   '''
   headLike = ( Mark.ARROWHEAD, Mark.DASHED_TAIL )
   if incoming in headLike and outgoing in headLike:
      return Occurrence.COLLIDER
   return Occurrence.NON_COLLIDER

def incidence( g ):
   '''
   For every node v, the list of ( glyph, w, mark at v, mark at w ) over all
   edges incident to v, in canonical order.
   '''
   result = { v: [] for v in g.sortedIds() }
   for tail, head in sorted( g.directed ):
      result[ tail ].append( ( GLYPH_OUT, head, Mark.TAIL, Mark.ARROWHEAD ) )
      result[ head ].append( ( GLYPH_IN, tail, Mark.ARROWHEAD, Mark.TAIL ) )
   for u, v in sorted( g.dashed ):
      result[ u ].append( ( GLYPH_DASHED, v, Mark.DASHED_TAIL, Mark.DASHED_TAIL ) )
      result[ v ].append( ( GLYPH_DASHED, u, Mark.DASHED_TAIL, Mark.DASHED_TAIL ) )
   for edges in result.values():
      edges.sort()
   return result

class WalkQuery:
   def __init__( self, sources, targets, given=frozenset(), first=FirstEdge.ANY,
                 last=LastEdge.ANY, allowSourceEqualsTarget=False ):
      self.sources = frozenset( sources )
      self.targets = frozenset( targets )
      self.given = frozenset( given )
      self.first = first
      self.last = last
      self.allowSourceEqualsTarget = allowSourceEqualsTarget

   def validate( self, g ):
      if not self.sources:
         raise inputError( 'Walk query needs at least one source' )
      if not self.targets:
         raise inputError( 'Walk query needs at least one target' )
      g.checkNodes( self.sources, 'source' )
      g.checkNodes( self.targets, 'target' )
      g.checkNodes( self.given, 'conditioning node' )
      if self.first not in FIRST_EDGE_CONSTRAINTS:
         raise inputError( f'Unknown first-edge constraint {self.first!r}' )
      if self.last not in LAST_EDGE_CONSTRAINTS:
         raise inputError( f'Unknown last-edge constraint {self.last!r}' )

   def endpoints( self ):
      '''
      Targets a walk may end at. Without allowSourceEqualsTarget, nodes that
      are also sources do not count as targets.
      '''
      if self.allowSourceEqualsTarget:
         return self.targets
      return self.targets - self.sources

   def firstEdgeAllowed( self, markAtSource ):
      if self.first == FirstEdge.BACK_DOOR_ONLY:
         return markAtSource != Mark.TAIL
      if self.first == FirstEdge.FRONT_DOOR_ONLY:
         return markAtSource == Mark.TAIL
      if self.first == FirstEdge.ARROWHEAD_AT_SOURCE:
         return markAtSource == Mark.ARROWHEAD
      return True

   def lastEdgeAllowed( self, markAtTarget ):
      if self.last == LastEdge.POINTING_INTO_TARGET:
         return markAtTarget == Mark.ARROWHEAD
      return True

   def occurrenceAllowed( self, node, incoming, outgoing ):
      kind = classifyOccurrence( incoming, outgoing )
      if kind == Occurrence.COLLIDER:
         return node in self.given
      return node not in self.given

   def toJson( self ):
      return {
         'sources': sorted( self.sources ),
         'targets': sorted( self.targets ),
         'given': sorted( self.given ),
         'first': self.first,
         'last': self.last,
         'allowSourceEqualsTarget': self.allowSourceEqualsTarget,
      }

class Verdict:
   def __init__( self, connected, witness=None ):
      assert connected == ( witness is not None )
      self.connected = connected
      self.witness = witness

   def toJson( self ):
      return { 'connected': self.connected, 'witness': self.witness }

   def __repr__( self ):
      if self.connected:
         return f'Verdict(connected via {" ".join( self.witness )})'
      return 'Verdict(blocked)'

def existsConnectingWalk( g, q ):
   '''
   Breadth-first search over ( node, entry mark ) states. Start states carry no
   entry mark and are constrained only by the first-edge constraint.
   '''
   q.validate( g )
   edges = incidence( g )
   endpoints = q.endpoints()
   parent = {}
   queue = collections.deque()
   for source in sorted( q.sources ):
      state = ( source, None )
      parent[ state ] = None
      queue.append( state )

   while queue:
      state = queue.popleft()
      node, entryMark = state
      for glyph, nextNode, markHere, markThere in edges[ node ]:
         if entryMark is None:
            if not q.firstEdgeAllowed( markHere ):
               continue
         elif not q.occurrenceAllowed( node, entryMark, markHere ):
            continue
         if nextNode in endpoints and q.lastEdgeAllowed( markThere ):
            witness = _walkTo( parent, state ) + [ glyph, nextNode ]
            log.debug( 'connecting walk %s', ' '.join( witness ) )
            return Verdict( True, witness )
         nextState = ( nextNode, markThere )
         if nextState not in parent:
            parent[ nextState ] = ( state, glyph )
            queue.append( nextState )
   return Verdict( False )

def _walkTo( parent, state ):
   walk = [ state[ 0 ] ]
   while parent[ state ] is not None:
      state, glyph = parent[ state ]
      walk = [ state[ 0 ], glyph ] + walk
   return walk

def mSeparationVerdict( g, A, B, S ):
   '''
   The plain A-B query given S; the Verdict carries a witness walk when A and
   B are not m-separated.
   '''
   A, B = frozenset( A ), frozenset( B )
   if not A or not B:
      raise inputError( 'm-separation needs non-empty node sets' )
   if A & B:
      raise inputError( f'm-separation needs disjoint sets, both contain '
                        f'{", ".join( sorted( A & B ) )}' )
   return existsConnectingWalk( g, WalkQuery( A, B, S ) )

def mSeparated( g, A, B, S ):
   return not mSeparationVerdict( g, A, B, S ).connected

def _marksOf( glyph ):
   if glyph == GLYPH_OUT:
      return Mark.TAIL, Mark.ARROWHEAD
   if glyph == GLYPH_IN:
      return Mark.ARROWHEAD, Mark.TAIL
   return Mark.DASHED_TAIL, Mark.DASHED_TAIL

def _edgeExists( g, u, glyph, v ):
   if glyph == GLYPH_OUT:
      return g.hasDirected( u, v )
   if glyph == GLYPH_IN:
      return g.hasDirected( v, u )
   return glyph == GLYPH_DASHED and g.hasDashed( u, v )

def replayWalk( g, q, walk ):
   '''
   Check independently that `walk` ( alternating node / glyph list ) exists in
   g and is m-connecting under the query's constraints.
   '''
   if len( walk ) < 3 or len( walk ) % 2 == 0:
      return False
   nodes = walk[ 0::2 ]
   glyphs = walk[ 1::2 ]
   if nodes[ 0 ] not in q.sources or nodes[ -1 ] not in q.endpoints():
      return False
   for i, glyph in enumerate( glyphs ):
      if not _edgeExists( g, nodes[ i ], glyph, nodes[ i + 1 ] ):
         return False
   marks = [ _marksOf( glyph ) for glyph in glyphs ]
   if not q.firstEdgeAllowed( marks[ 0 ][ 0 ] ):
      return False
   if not q.lastEdgeAllowed( marks[ -1 ][ 1 ] ):
      return False
   for i in range( 1, len( nodes ) - 1 ):
      if not q.occurrenceAllowed( nodes[ i ], marks[ i - 1 ][ 1 ], marks[ i ][ 0 ] ):
         return False
   return True

def bruteForceConnectingWalk( g, q, maxEdges ):
   '''
   Testing oracle: depth-first enumeration of every walk with at most
   `maxEdges` edges. A prefix is dropped only once one of its occurrences
   breaks an m-connecting condition; walks that revisit nodes, edges or entry
   marks are all enumerated.
   '''
   if maxEdges < 1:
      raise inputError( f'maxEdges must be at least 1, got {maxEdges}' )
   q.validate( g )
   edges = incidence( g )
   endpoints = q.endpoints()

   canStart = any( q.firstEdgeAllowed( markHere )
                   for source in q.sources for _, _, markHere, _ in edges[ source ] )
   canEnd = any( q.lastEdgeAllowed( markHere )
                 for target in endpoints for _, _, markHere, _ in edges[ target ] )
   if not canStart or not canEnd:
      return Verdict( False )

   def extend( walk, entryMark ):
      node = walk[ -1 ]
      depth = len( walk ) // 2
      for glyph, nextNode, markHere, markThere in edges[ node ]:
         if depth == 0:
            if not q.firstEdgeAllowed( markHere ):
               continue
         elif not q.occurrenceAllowed( node, entryMark, markHere ):
            continue
         nextWalk = walk + [ glyph, nextNode ]
         if nextNode in endpoints and q.lastEdgeAllowed( markThere ):
            return nextWalk
         if depth + 1 < maxEdges:
            found = extend( nextWalk, markThere )
            if found is not None:
               return found
      return None

   for source in sorted( q.sources ):
      found = extend( [ source ], None )
      if found is not None:
         return Verdict( True, found )
   return Verdict( False )
