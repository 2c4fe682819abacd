# Use of this source code is governed by the Apache License 2.0
# that can be found in the LICENSE file.

import unittest
import os
import shutil
import tempfile

import numpy as np

from tscausal import intervene, varmodel
from tscausal.causallib import CAUSAL_RESULT, CausalToolsException

from . import Fixtures

class TestVarModel( unittest.TestCase ):

    def _assertInputError( self, func, *args ):
        with self.assertRaises( CausalToolsException ) as cm:
            func( *args )
        self.assertEqual( cm.exception.code, CAUSAL_RESULT.INPUT_ERROR )

    def test_shapes( self ):
        m = Fixtures.mediatedModel()
        self.assertEqual( m.d, 4 )
        self.assertEqual( m.p, 2 )
        self.assertEqual( m.indices( [ 'z', '1' ] ), [ 0, 3 ] )

    def test_bad_models( self ):
        self._assertInputError( varmodel.VarModel, [ 'x' ], [ [ [ 0.5, 0.1 ] ] ], [ [ 1.0 ] ] )
        self._assertInputError( varmodel.VarModel, [ 'x', 'y' ], [ np.zeros( ( 2, 2 ) ) ],
                                [ [ 1.0, 0.5 ], [ 0.4, 1.0 ] ] )
        self._assertInputError( varmodel.VarModel, [ 'x', 'y' ], [ np.zeros( ( 2, 2 ) ) ],
                                [ [ 1.0, 2.0 ], [ 2.0, 1.0 ] ] )
        self._assertInputError( varmodel.VarModel, [ 'x', 'x' ], [ np.zeros( ( 2, 2 ) ) ],
                                np.eye( 2 ) )
        self._assertInputError( varmodel.VarModel, [ 'x' ], [], [ [ 1.0 ] ] )

    def test_unknown_label( self ):
        self._assertInputError( Fixtures.mediatedModel().index, 'q' )

    def test_document_files( self ):
        m = varmodel.loadVar( Fixtures.dataPath( 'mediated.json' ) )
        np.testing.assert_array_equal( m.A, Fixtures.mediatedModel().A )
        self.assertEqual( m.observed, [ True, True, True, False ] )
        m = varmodel.loadVar( Fixtures.dataPath( 'confounded.json' ) )
        np.testing.assert_array_equal( m.Sigma, Fixtures.confoundedModel().Sigma )

    def test_document_lag_mismatch( self ):
        doc = Fixtures.scalarAr1().toDocument()
        doc[ 'p' ] = 2
        self._assertInputError( varmodel.varFromDocument, doc )

class TestStationarity( unittest.TestCase ):

    def test_white_noise( self ):
        self.assertEqual( varmodel.checkStationary( Fixtures.whiteNoiseModel() ), 0.0 )

    def test_scalar( self ):
        self.assertAlmostEqual( varmodel.checkStationary( Fixtures.scalarAr1( 0.9 ) ), 0.9 )

    def test_unit_root( self ):
        with self.assertRaises( CausalToolsException ) as cm:
            varmodel.checkStationary( Fixtures.scalarAr1( 1.0 ) )
        self.assertEqual( cm.exception.code, CAUSAL_RESULT.NUMERICAL_FAILURE )

class TestAutocovariance( unittest.TestCase ):

    def test_scalar_ar1( self ):
        gammas = varmodel.autocovariance( Fixtures.scalarAr1( 0.5 ), 3 )
        self.assertAlmostEqual( gammas[ 0 ][ 0, 0 ], 4.0 / 3, places=10 )
        self.assertAlmostEqual( gammas[ 1 ][ 0, 0 ], 2.0 / 3, places=10 )
        self.assertAlmostEqual( gammas[ 3 ][ 0, 0 ], 1.0 / 6, places=10 )

    def test_white_noise( self ):
        gammas = varmodel.autocovariance( Fixtures.whiteNoiseModel( 2 ), 2 )
        np.testing.assert_allclose( gammas[ 0 ], np.eye( 2 ), atol=1e-12 )
        np.testing.assert_allclose( gammas[ 1 ], np.zeros( ( 2, 2 ) ), atol=1e-12 )

    def test_matches_stacked_recursion( self ):
        # Gamma(k) = sum_j A_j Gamma(k-j) also holds for k < p via Gamma(-k) = Gamma(k)'
        rng = np.random.default_rng( 3 )
        for _ in range( 20 ):
            m = Fixtures.randomModel( rng, d=int( rng.integers( 2, 5 ) ),
                                      p=int( rng.integers( 1, 4 ) ) )
            gammas = varmodel.autocovariance( m, 10 )
            lagged = lambda k: gammas[ k ] if k >= 0 else gammas[ -k ].T
            for k in range( 1, 11 ):
                expected = sum( m.A[ j - 1 ] @ lagged( k - j ) for j in range( 1, m.p + 1 ) )
                np.testing.assert_allclose( gammas[ k ], expected, atol=1e-10 )
            np.testing.assert_allclose( gammas[ 0 ], gammas[ 0 ].T, atol=1e-14 )
            expected = m.Sigma + sum( m.A[ i - 1 ] @ lagged( j - i ) @ m.A[ j - 1 ].T
                                      for i in range( 1, m.p + 1 )
                                      for j in range( 1, m.p + 1 ) )
            np.testing.assert_allclose( gammas[ 0 ], expected, atol=1e-10 )

    def test_mediated_cross_covariances( self ):
        # columns 1, 2, 3, z; Gamma(k) = E[ X(t) X(t-k)' ]
        gammas = varmodel.autocovariance( Fixtures.mediatedModel(), 2 )
        self.assertAlmostEqual( gammas[ 0 ][ 0, 3 ], 0.0, places=10 )
        self.assertAlmostEqual( gammas[ 1 ][ 1, 3 ], Fixtures.ALPHA2, places=10 )
        self.assertAlmostEqual( gammas[ 2 ][ 0, 3 ], Fixtures.ALPHA1, places=10 )
        self.assertAlmostEqual( gammas[ 1 ][ 0, 1 ],
                                Fixtures.BETA12 * gammas[ 0 ][ 1, 1 ] +
                                Fixtures.ALPHA1 * Fixtures.ALPHA2, places=10 )
        self.assertAlmostEqual( gammas[ 1 ][ 2, 1 ], Fixtures.BETA32 * gammas[ 0 ][ 1, 1 ],
                                places=10 )

    def test_matches_sample_autocovariance( self ):
        m = Fixtures.mediatedModel()
        gammas = varmodel.autocovariance( m, 2 )
        X = intervene.simulateObservational( m, 1000000, seed=12 ).values
        X = X - X.mean( axis=0 )
        T = X.shape[ 0 ]
        for k in range( 3 ):
            sample = X[ k: ].T @ X[ :T - k ] / T
            np.testing.assert_allclose( sample, gammas[ k ], atol=0.015 )

    def test_negative_lag( self ):
        with self.assertRaises( CausalToolsException ):
            varmodel.autocovariance( Fixtures.scalarAr1(), -1 )

class TestSubprocessAR( unittest.TestCase ):

    def test_full_set_recovers_model( self ):
        rng = np.random.default_rng( 7 )
        for _ in range( 5 ):
            m = Fixtures.randomModel( rng, d=3, p=2 )
            s = varmodel.subprocessAr( m, m.labels, L=6 )
            np.testing.assert_allclose( s.Phi[ 0 ], m.A[ 0 ], atol=1e-8 )
            np.testing.assert_allclose( s.Phi[ 1 ], m.A[ 1 ], atol=1e-8 )
            for phi in s.Phi[ 2: ]:
                np.testing.assert_allclose( phi, 0.0, atol=1e-8 )
            np.testing.assert_allclose( s.SigmaTilde, m.Sigma, atol=1e-8 )
            self.assertLess( s.tailNorm, 1e-8 )
            self.assertEqual( s.warnings, [] )

    def test_mediated( self ):
        s = varmodel.subprocessAr( Fixtures.mediatedModel(), [ '1', '2', '3' ] )
        self.assertEqual( s.S, [ '1', '2', '3' ] )
        self.assertEqual( s.L, 30 )
        self.assertAlmostEqual( s.coefficient( '1', '2', 1 ), Fixtures.MEDIATED_PHI12_1, delta=1e-6 )
        self.assertAlmostEqual( s.coefficient( '1', '3', 2 ), Fixtures.MEDIATED_PHI13_2, delta=1e-6 )
        self.assertAlmostEqual( s.coefficient( '1', '1', 3 ), 0.0, delta=1e-6 )

    def test_confounded( self ):
        s = varmodel.subprocessAr( Fixtures.confoundedModel(), [ '1', '2', '3' ] )
        self.assertAlmostEqual( s.coefficient( '1', '2', 1 ), Fixtures.BETA12, delta=1e-6 )
        self.assertAlmostEqual( s.coefficient( '2', '3', 1 ), Fixtures.BETA23, delta=1e-6 )
        self.assertAlmostEqual( s.coefficient( '1', '3', 2 ), Fixtures.ALPHA * Fixtures.RHO,
                                delta=1e-6 )
        self.assertEqual( len( s.nonzeroCoefficients() ), 3 )

    def test_subset_order_follows_model( self ):
        s = varmodel.subprocessAr( Fixtures.mediatedModel(), [ '3', '1' ], L=10 )
        self.assertEqual( s.S, [ '1', '3' ] )

    def test_lag_below_order( self ):
        with self.assertRaises( CausalToolsException ):
            varmodel.subprocessAr( Fixtures.mediatedModel(), [ '1' ], L=1 )

    def test_projection_is_optimal( self ):
        m = Fixtures.mediatedModel()
        s = varmodel.subprocessAr( m, [ '1', '2', '3' ], L=8 )
        data = intervene.simulateObservational( m, 40000, seed=5 ).select( [ '1', '2', '3' ] )
        X = data.values
        L = s.L
        fitted = sum( X[ L - j:X.shape[ 0 ] - j ] @ s.Phi[ j - 1 ].T
                      for j in range( 1, L + 1 ) )
        residuals = X[ L: ] - fitted
        T = residuals.shape[ 0 ]
        # residuals are uncorrelated with every regressor lag
        for j in range( 1, L + 1 ):
            cross = residuals.T @ X[ L - j:X.shape[ 0 ] - j ] / T
            self.assertLess( np.max( np.abs( cross ) ), 5 * 3 / np.sqrt( T ) )

    def test_to_var_model( self ):
        s = varmodel.subprocessAr( Fixtures.confoundedModel(), [ '1', '2', '3' ], L=4 )
        m = s.toVarModel()
        self.assertEqual( m.labels, [ '1', '2', '3' ] )
        self.assertEqual( m.p, 4 )

class TestPredictor( unittest.TestCase ):

    def test_mediated_two_steps( self ):
        s = varmodel.subprocessAr( Fixtures.mediatedModel(), [ '1', '2', '3' ] )
        coeffs = varmodel.predictorCoeffs( s, 2 )
        self.assertEqual( coeffs.h, 2 )
        self.assertAlmostEqual( coeffs.coefficient( '1', '3' ), Fixtures.ACE_3_ON_1_H2,
                                delta=1e-6 )

    def test_confounded_two_steps( self ):
        s = varmodel.subprocessAr( Fixtures.confoundedModel(), [ '1', '2', '3' ] )
        coeffs = varmodel.predictorCoeffs( s, 2 )
        self.assertAlmostEqual( coeffs.coefficient( '1', '3' ),
                                Fixtures.ALPHA * Fixtures.RHO + Fixtures.ACE_3_ON_1_H2,
                                delta=1e-6 )

    def test_one_step_is_phi( self ):
        s = varmodel.subprocessAr( Fixtures.mediatedModel(), [ '1', '2', '3' ], L=5 )
        coeffs = varmodel.predictorCoeffs( s, 1 )
        for phi, expected in zip( coeffs.PhiH, s.Phi ):
            np.testing.assert_array_equal( phi, expected )

    def test_matches_companion_powers( self ):
        rng = np.random.default_rng( 11 )
        for _ in range( 100 ):
            d, p = int( rng.integers( 2, 5 ) ), int( rng.integers( 1, 4 ) )
            m = Fixtures.randomModel( rng, d=d, p=p )
            s = varmodel.subprocessAr( m, m.labels, L=p )
            F = varmodel.companionMatrix( m )
            profiles = varmodel.predictorProfiles( s, 10 )
            self.assertEqual( [ c.h for c in profiles ], list( range( 1, 11 ) ) )
            for coeffs in profiles:
                top = np.linalg.matrix_power( F, coeffs.h )[ :d ]
                np.testing.assert_allclose( coeffs.PhiH1, top[ :, :d ], atol=1e-8 )
                for j in range( 1, p + 1 ):
                    np.testing.assert_allclose( coeffs.PhiH[ j - 1 ],
                                                top[ :, ( j - 1 ) * d:j * d ], atol=1e-8 )

    def test_truncation_flag( self ):
        s = varmodel.subprocessAr( Fixtures.scalarAr1(), [ 'x' ], L=1 )
        coeffs = varmodel.predictorCoeffs( s, 3 )
        self.assertTrue( coeffs.truncated )
        self.assertAlmostEqual( coeffs.coefficient( 'x', 'x' ), 0.125, places=10 )
        self.assertTrue( s.warnings )

    def test_bad_horizon( self ):
        s = varmodel.subprocessAr( Fixtures.scalarAr1(), [ 'x' ], L=1 )
        with self.assertRaises( CausalToolsException ):
            varmodel.predictorCoeffs( s, 0 )

class TestPathDiagram( unittest.TestCase ):

    def test_mediated_is_feedback( self ):
        self.assertEqual( varmodel.pathDiagram( Fixtures.mediatedModel() ), Fixtures.FEEDBACK )

    def test_confounded_is_front_door( self ):
        self.assertEqual( varmodel.pathDiagram( Fixtures.confoundedModel() ), Fixtures.FRONT_DOOR )

    def test_self_loops_dropped( self ):
        g = varmodel.pathDiagram( Fixtures.scalarAr1() )
        self.assertFalse( g.directed )

class TestNumericGranger( unittest.TestCase ):

    def test_white_noise( self ):
        s = varmodel.subprocessAr( Fixtures.whiteNoiseModel( 3 ), [ '1', '2', '3' ], L=2 )
        self.assertTrue( varmodel.grangerNoncausalNumeric( s, [ '1' ], [ '2', '3' ] ) )
        self.assertTrue( varmodel.contempIndependentNumeric( s, [ '1' ], [ '2' ] ) )

    def test_mediated_mediated( self ):
        s = varmodel.subprocessAr( Fixtures.mediatedModel(), [ '1', '2', '3' ] )
        self.assertFalse( varmodel.grangerNoncausalNumeric( s, [ '3' ], [ '1' ] ) )

    def test_confounded_contemporaneous( self ):
        m = Fixtures.confoundedModel()
        s = varmodel.subprocessAr( m, m.labels, L=2 )
        self.assertFalse( varmodel.contempIndependentNumeric( s, [ '3' ], [ 'z' ] ) )
        self.assertTrue( varmodel.contempIndependentNumeric( s, [ '1' ], [ '2' ] ) )

    def test_horizons( self ):
        m = varmodel.VarModel( [ '1', '2', '3' ],
                               [ [ [ 0, 0.5, 0 ], [ 0, 0, 0.4 ], [ 0, 0, 0 ] ] ], np.eye( 3 ) )
        s = varmodel.subprocessAr( m, m.labels, L=2 )
        self.assertTrue( varmodel.grangerNoncausalNumeric( s, [ '3' ], [ '1' ] ) )
        self.assertFalse( varmodel.grangerNoncausalHorizonNumeric( s, [ '3' ], [ '1' ], 2 ) )
        self.assertTrue( varmodel.grangerNoncausalHorizonNumeric( s, [ '1' ], [ '3' ], 3 ) )

    def test_sets_must_be_disjoint( self ):
        s = varmodel.subprocessAr( Fixtures.whiteNoiseModel( 2 ), [ '1', '2' ], L=1 )
        with self.assertRaises( CausalToolsException ):
            varmodel.grangerNoncausalNumeric( s, [ '1' ], [ '1' ] )

class TestOlsFit( unittest.TestCase ):

    @classmethod
    def setUpClass( cls ):
        cls.mediated = intervene.simulateObservational( Fixtures.mediatedModel(), 50000,
                                                         seed=9 )

    def setUp( self ):
        self.test_dir = tempfile.mkdtemp()

    def tearDown( self ):
        shutil.rmtree( self.test_dir )

    def test_scalar_ar1( self ):
        data = intervene.simulateObservational( Fixtures.scalarAr1( 0.5 ), 200000, seed=4 )
        m = varmodel.olsFit( data, 1 )
        self.assertAlmostEqual( m.A[ 0 ][ 0, 0 ], 0.5, delta=0.01 )
        self.assertAlmostEqual( m.Sigma[ 0, 0 ], 1.0, delta=0.02 )

    def test_mediated_structure( self ):
        m = varmodel.olsFit( self.mediated, 2 )
        for j, b, a in ( ( 0, 0, 1 ), ( 0, 1, 2 ), ( 0, 1, 3 ), ( 0, 2, 1 ), ( 1, 0, 3 ) ):
            self.assertAlmostEqual( m.A[ j ][ b, a ],
                                    Fixtures.mediatedModel().A[ j ][ b, a ], delta=0.02 )
        self.assertAlmostEqual( m.A[ 0 ][ 2, 0 ], 0.0, delta=0.02 )

    def test_rank_deficient( self ):
        data = varmodel.TimeSeriesData( [ 'x', 'y' ], np.zeros( ( 200, 2 ) ) )
        with self.assertRaises( CausalToolsException ) as cm:
            varmodel.olsFit( data, 1 )
        self.assertEqual( cm.exception.code, CAUSAL_RESULT.NUMERICAL_FAILURE )

    def test_too_short( self ):
        data = varmodel.TimeSeriesData( [ 'x' ], np.ones( ( 10, 1 ) ) )
        with self.assertRaises( CausalToolsException ) as cm:
            varmodel.olsFit( data, 1 )
        self.assertEqual( cm.exception.code, CAUSAL_RESULT.INPUT_ERROR )

    def test_csv_round_trip( self ):
        path = os.path.join( self.test_dir, 'data.csv' )
        self.mediated.toCsv( path )
        data = varmodel.loadCsv( path )
        self.assertEqual( data.labels, [ '1', '2', '3', 'z' ] )
        np.testing.assert_array_equal( data.values, self.mediated.values )

    def test_bad_csv( self ):
        path = os.path.join( self.test_dir, 'data.csv' )
        with open( path, 'w' ) as f:
            f.write( 'x,y\n1.0,abc\n' )
        with self.assertRaises( CausalToolsException ):
            varmodel.loadCsv( path )

if __name__ == '__main__':
    unittest.main()
