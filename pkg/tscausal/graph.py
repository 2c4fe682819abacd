# Use of this source code is governed by the Apache License 2.0
# that can be found in the LICENSE file.

'''
Mixed graphs for time series path diagrams: nodes stand for component
processes, a directed edge a -> b for lagged influence of X_a on X_b, and a
dashed edge a --- b for contemporaneous dependence. Up to three edges may join
two nodes (a -> b, b -> a, a --- b).
'''

import logging

import networkx as nx

from . import causallib
from .causallib import inputError

log = logging.getLogger( __name__ )

DIRECTED = 'directed'
DASHED = 'dashed'
EDGE_KINDS = ( DIRECTED, DASHED )

class Node:
   def __init__( self, id, observed=True ):
      if not isinstance( id, str ) or not id:
         raise inputError( f'Node id must be a non-empty string, got {id!r}' )
      self.id = id
      self.observed = bool( observed )

   def __eq__( self, other ):
      return ( isinstance( other, Node ) and
               ( self.id, self.observed ) == ( other.id, other.observed ) )

   def __hash__( self ):
      return hash( ( self.id, self.observed ) )

   def __repr__( self ):
      flag = '' if self.observed else ', latent'
      return f'Node({self.id!r}{flag})'

def dashedKey( u, v ):
   # dashed edges are unordered; store the smaller id first
   return ( u, v ) if u <= v else ( v, u )

class MixedGraph:
   '''
   Immutable mixed graph. `directed` holds ( tail, head ) pairs and `dashed`
   holds unordered pairs normalised to ( smaller, larger ).
   '''
   def __init__( self, nodes, directed=(), dashed=() ):
      self._nodes = {}
      for i, node in enumerate( nodes ):
         if isinstance( node, str ):
            node = Node( node )
         if node.id in self._nodes:
            raise inputError( f'Duplicate node {node.id!r}', location=f'nodes/{i}' )
         self._nodes[ node.id ] = node

      directedEdges = set()
      for i, ( tail, head ) in enumerate( directed ):
         location = f'directed/{i}'
         self._checkEndpoints( tail, head, location )
         if ( tail, head ) in directedEdges:
            raise inputError( f'Duplicate directed edge {tail} -> {head}',
                              location=location )
         directedEdges.add( ( tail, head ) )

      dashedEdges = set()
      for i, ( u, v ) in enumerate( dashed ):
         location = f'dashed/{i}'
         self._checkEndpoints( u, v, location )
         key = dashedKey( u, v )
         if key in dashedEdges:
            raise inputError( f'Duplicate dashed edge {u} --- {v}', location=location )
         dashedEdges.add( key )

      self.directed = frozenset( directedEdges )
      self.dashed = frozenset( dashedEdges )
      self._dag = nx.DiGraph()
      self._dag.add_nodes_from( self._nodes )
      self._dag.add_edges_from( self.directed )

   def _checkEndpoints( self, u, v, location ):
      for endpoint in ( u, v ):
         if endpoint not in self._nodes:
            raise inputError( f'Edge endpoint {endpoint!r} is not a declared node',
                              location=location )
      if u == v:
         raise inputError( f'Self-loop at {u!r} is not allowed', location=location )

   @property
   def nodes( self ):
      return frozenset( self._nodes.values() )

   def nodeIds( self ):
      return frozenset( self._nodes )

   def sortedIds( self ):
      return sorted( self._nodes )

   def node( self, id ):
      self.checkNodes( [ id ] )
      return self._nodes[ id ]

   def isObserved( self, id ):
      return self.node( id ).observed

   def observedIds( self ):
      return frozenset( n for n, node in self._nodes.items() if node.observed )

   def latentIds( self ):
      return frozenset( n for n, node in self._nodes.items() if not node.observed )

   def hasDirected( self, tail, head ):
      return ( tail, head ) in self.directed

   def hasDashed( self, u, v ):
      return dashedKey( u, v ) in self.dashed

   def children( self, v ):
      return set( self._dag.successors( v ) )

   def parents( self, v ):
      return set( self._dag.predecessors( v ) )

   def checkNodes( self, ids, what='node' ):
      unknown = sorted( set( ids ) - set( self._nodes ) )
      if unknown:
         raise inputError( f'Unknown {what} id(s): {", ".join( unknown )}' )

   def directedGraph( self ):
      '''
      A copy of the directed part as a networkx DiGraph.
      '''
      return self._dag.copy()

   def withoutDashed( self ):
      return MixedGraph( self._nodes.values(), self.directed )

   def __eq__( self, other ):
      return ( isinstance( other, MixedGraph ) and
               self._nodes == other._nodes and
               self.directed == other.directed and
               self.dashed == other.dashed )

   def __hash__( self ):
      return hash( ( self.nodes, self.directed, self.dashed ) )

   def __repr__( self ):
      edges = [ f'{t}->{h}' for t, h in sorted( self.directed ) ]
      edges += [ f'{u}---{v}' for u, v in sorted( self.dashed ) ]
      return f'MixedGraph(nodes={self.sortedIds()}, edges=[{", ".join( edges )}])'

def ancestors( g, A ):
   '''
   an(A): A together with every node that has a directed path into A.
   Dashed edges play no part.
   '''
   A = frozenset( A )
   g.checkNodes( A )
   result = set( A )
   for a in A:
      result |= nx.ancestors( g._dag, a )
   return frozenset( result )

def isAncestral( g, A ):
   return ancestors( g, A ) == frozenset( A )

def fromDocument( document ):
   nodes = [ Node( n[ 'id' ], n.get( 'observed', True ) )
             for n in document.get( 'nodes', [] ) ]
   directed = [ tuple( e ) for e in document.get( 'directed', [] ) ]
   dashed = [ tuple( e ) for e in document.get( 'dashed', [] ) ]
   return MixedGraph( nodes, directed, dashed )

def toDocument( g ):
   return {
      'nodes': [ { 'id': n, 'observed': g._nodes[ n ].observed }
                 for n in g.sortedIds() ],
      'directed': [ [ t, h ] for t, h in sorted( g.directed ) ],
      'dashed': [ [ u, v ] for u, v in sorted( g.dashed ) ],
   }

def parseGraph( text, source='<string>' ):
   return fromDocument( causallib.parseDocument( text, 'graph', source ) )

def serializeGraph( g ):
   return causallib.dumpJson( toDocument( g ) )

def loadGraph( filename ):
   return fromDocument( causallib.loadDocument( filename, 'graph' ) )

def graphFromEdgeList( text, latent=frozenset(), isolated=() ):
   '''
   Build a graph from the command-line edge shorthand. Nodes are the edge
   endpoints plus `isolated`; nodes named in `latent` are unobserved.
   '''
   directed, dashed = causallib.parseEdgeList( text )
   ids = set( isolated ) | set( latent )
   for u, v in directed + dashed:
      ids.update( ( u, v ) )
   nodes = [ Node( n, n not in latent ) for n in sorted( ids ) ]
   log.debug( 'inline graph with %d nodes, %d directed, %d dashed edges',
              len( nodes ), len( directed ), len( dashed ) )
   return MixedGraph( nodes, directed, dashed )
