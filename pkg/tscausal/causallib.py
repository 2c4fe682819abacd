# Use of this source code is governed by the Apache License 2.0
# that can be found in the LICENSE file.

'''
Shared plumbing: result codes, the coded exception, schema validation of input
documents, the node-set and edge-list syntax, file hashing and JSON output.
'''

import hashlib
import importlib.resources
import json
import logging

import jsonschema
import pyparsing
import yaml

log = logging.getLogger( __name__ )

TOOL_NAME = 'tscausal'
TOOL_VERSION = '1.0'

DEFAULT_TOL = 1e-7
TAIL_NORM_LIMIT = 1e-6
DEFAULT_BURN_IN = 100
DEFAULT_REPS = 100000
DEFAULT_SEED = 1
COMPARE_K = 3.0
COMPARE_FLOOR = 1e-9

def defaultLag( p ):
   return max( 30, 5 * p )

class CAUSAL_RESULT:
   SUCCESS = 0
   INPUT_ERROR = 1
   NUMERICAL_FAILURE = 2
   INTERNAL_ERROR = 3

CAUSAL_MESSAGE = {
   CAUSAL_RESULT.SUCCESS: "Query answered.",
   CAUSAL_RESULT.INPUT_ERROR: "Invalid input.",
   CAUSAL_RESULT.NUMERICAL_FAILURE: "Numerical failure.",
   CAUSAL_RESULT.INTERNAL_ERROR: "Internal error.",
}

class CausalToolsException( Exception ):
   def __init__( self, code, message=None, location=None ):
      self.code = code
      self.location = location
      if message is None:
         message = CAUSAL_MESSAGE[ code ]
      super( CausalToolsException, self ).__init__( message )

   def toJson( self ):
      error = { 'code': self.code, 'message': str( self ) }
      if self.location is not None:
         error[ 'location' ] = self.location
      return error

def inputError( message, location=None ):
   return CausalToolsException( CAUSAL_RESULT.INPUT_ERROR, message, location )

def numericalError( message, location=None ):
   return CausalToolsException( CAUSAL_RESULT.NUMERICAL_FAILURE, message, location )

def loadSchema( name ):
   text = importlib.resources.files( __package__ ).joinpath(
      'static', f'{name}1.0.json' ).read_text()
   return yaml.safe_load( text )

def validateDocument( document, name ):
   '''
   Validate a parsed document against the bundled schema `name`. Schema
   violations become input errors carrying the JSON path of the offending item.
   '''
   try:
      jsonschema.validate( document, loadSchema( name ) )
   except jsonschema.exceptions.ValidationError as e:
      location = '/'.join( str( p ) for p in e.absolute_path ) or '<root>'
      raise inputError( f'{name} document validation error: {e.message}',
                        location=location )

def parseDocument( text, name, source='<string>' ):
   '''
   Parse a JSON (or YAML) document and validate it against schema `name`.
   '''
   try:
      document = yaml.safe_load( text )
   except yaml.YAMLError as e:
      raise inputError( f'Error parsing {source}: {e}', location=source )
   validateDocument( document, name )
   return document

def loadDocument( filename, name ):
   try:
      with open( filename ) as f:
         text = f.read()
   except EnvironmentError as e:
      raise inputError( f'Error opening {filename}: {e}', location=filename )
   return parseDocument( text, name, source=filename )

def sha256sum( filename, blockSize=65536 ):
   '''
   Compute the SHA-256 sum of a file.
   We read in blocks in case of large files.
   '''
   result = hashlib.sha256()
   with open( filename, 'rb' ) as f:
      block = f.read( blockSize )
      while block:
         result.update( block )
         block = f.read( blockSize )

   return result.hexdigest()

def dumpJson( document ):
   return json.dumps( document, sort_keys=True, indent=1 ) + '\n'

# Node labels are opaque, but the command-line syntax needs a token class.
# Anything but separators and edge glyphs is allowed; a hyphen may join two
# label characters.
label = pyparsing.Regex( r'[A-Za-z0-9_.:+@#$%&*!?]+(?:-[A-Za-z0-9_.:+@#$%&*!?]+)*' )
nodeSetSyntax = pyparsing.Optional( pyparsing.delimitedList( label ) )

directedArrow = pyparsing.Literal( '->' )
reversedArrow = pyparsing.Literal( '<-' )
dashedLine = pyparsing.Regex( r'-{3}' )
edgeGlyph = dashedLine ^ directedArrow ^ reversedArrow
edgeSyntax = pyparsing.Group( label + edgeGlyph + label )
edgeListSyntax = pyparsing.Optional( pyparsing.delimitedList( edgeSyntax ) )

def parseNodeSet( text ):
   '''
   Parse "a,b,d" into a frozenset of labels. The empty string is the empty set.
   '''
   if text is None:
      return frozenset()
   try:
      tokens = nodeSetSyntax.parseString( text.strip(), parseAll=True )
   except pyparsing.ParseException as e:
      raise inputError( f'Unable to parse node set {text!r}: {e}' )
   return frozenset( tokens )

def parseNodeList( text ):
   '''
   Like parseNodeSet, but keeps the given order (used where order matters).
   '''
   if text is None:
      return []
   try:
      tokens = nodeSetSyntax.parseString( text.strip(), parseAll=True )
   except pyparsing.ParseException as e:
      raise inputError( f'Unable to parse node list {text!r}: {e}' )
   return list( tokens )

def parseEdgeList( text ):
   '''
   Parse an edge shorthand like "d->a, c<-d, c---d" into a pair
   ( directed, dashed ) of lists of ( u, v ) tuples. "u<-v" is stored as v->u.
   '''
   try:
      tokens = edgeListSyntax.parseString( text.strip(), parseAll=True )
   except pyparsing.ParseException as e:
      raise inputError( f'Unable to parse edge list {text!r}: {e}' )
   directed = []
   dashed = []
   for u, glyph, v in tokens:
      if glyph == '->':
         directed.append( ( u, v ) )
      elif glyph == '<-':
         directed.append( ( v, u ) )
      else:
         dashed.append( ( u, v ) )
   return directed, dashed

def loadConfig( filename ):
   '''
   Load a YAML run configuration and validate its structure.
   '''
   try:
      with open( filename ) as f:
         config = yaml.safe_load( f.read() )
   except EnvironmentError as e:
      raise inputError( f'Error opening {filename}: {e}', location=filename )
   except yaml.YAMLError as e:
      raise inputError( f'Error parsing {filename}: {e}', location=filename )
   if config is None:
      config = {}
   validateDocument( config, 'config' )
   return config
