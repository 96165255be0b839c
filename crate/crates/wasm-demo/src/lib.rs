//! Browser bindings for a small in-page demo.
//!
//! The page offers three operations: draw a random connected graph and show
//! its Laplacian spectrum, train a small local-readout model one epoch at a
//! time, and run the trained model as per-node agents on the drawn graph.
//!
//! All logic lives in [`Demo`], which is plain Rust and testable natively;
//! [`Session`] only adapts it to JavaScript.

use fiedler_core::sim::run_simulation;
use fiedler_core::train::{TrainConfig, Trainer};
use fiedler_core::{generate_connected_graph, Dataset, Graph, GraphGenConfig, LaplacianSpectrum, ReadoutMode};
use wasm_bindgen::prelude::*;

/// Training settings sized for a browser tab.
pub fn demo_config(seed: u64) -> TrainConfig {
    TrainConfig {
        rounds: 4,
        mode: ReadoutMode::Local,
        hidden: 16,
        epochs: 1,
        batch_size: 32,
        seed,
        train_count: 400,
        val_count: 100,
        n_min: 6,
        n_max: 10,
        record_wall_time: false,
        ..TrainConfig::default()
    }
}

pub struct Demo {
    trainer: Trainer<Dataset>,
    graph: Graph,
    spectrum: LaplacianSpectrum,
}

impl Demo {
    pub fn new(seed: u64) -> Result<Self, String> {
        let config = demo_config(seed);
        let (train, val) = config.generate_datasets().map_err(|e| e.to_string())?;
        let trainer = Trainer::new(config, train, val).map_err(|e| e.to_string())?;
        let graph = Graph::cycle(8).map_err(|e| e.to_string())?;
        let spectrum = LaplacianSpectrum::of(&graph);
        Ok(Self {
            trainer,
            graph,
            spectrum,
        })
    }

    /// Replaces the displayed graph with a random connected one on `n` nodes.
    pub fn draw_graph(&mut self, n: usize, seed: u64, index: u64) -> Result<(), String> {
        let cfg = GraphGenConfig::with_nodes(n, n, seed);
        self.graph = generate_connected_graph(&cfg, index).map_err(|e| e.to_string())?;
        self.spectrum = LaplacianSpectrum::of(&self.graph);
        Ok(())
    }

    pub fn graph(&self) -> &Graph {
        &self.graph
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.spectrum.eigenvalues
    }

    pub fn lambda2(&self) -> f64 {
        self.spectrum.lambda2()
    }

    /// `[epoch, train_l2, val_l1]` after one more epoch.
    pub fn train_epoch(&mut self) -> Result<[f64; 3], String> {
        let r = self.trainer.run_epoch().map_err(|e| e.to_string())?;
        Ok([r.epoch as f64, r.train_l2, r.val_l1])
    }

    pub fn epochs_done(&self) -> usize {
        self.trainer.epochs_done()
    }

    /// Per-node estimates from the agent simulation with the current weights.
    pub fn simulate(&self) -> Vec<f64> {
        let rounds = self.trainer.config().rounds;
        run_simulation(self.trainer.params(), &self.graph, rounds).estimates
    }
}

#[wasm_bindgen]
pub struct Session {
    inner: Demo,
}

#[wasm_bindgen]
impl Session {
    #[wasm_bindgen(constructor)]
    pub fn new(seed: u32) -> Result<Session, JsError> {
        Demo::new(seed.into()).map(|inner| Session { inner }).map_err(|e| JsError::new(&e))
    }

    #[wasm_bindgen(js_name = drawGraph)]
    pub fn draw_graph(&mut self, n: u32, seed: u32, index: u32) -> Result<(), JsError> {
        self.inner
            .draw_graph(n as usize, seed.into(), index.into())
            .map_err(|e| JsError::new(&e))
    }

    #[wasm_bindgen(js_name = nodeCount)]
    pub fn node_count(&self) -> u32 {
        self.inner.graph().node_count() as u32
    }

    /// Edge endpoints flattened as `[a0, b0, a1, b1, ...]`.
    pub fn edges(&self) -> Vec<u32> {
        self.inner
            .graph()
            .edges()
            .iter()
            .flat_map(|&(a, b)| [a as u32, b as u32])
            .collect()
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        self.inner.eigenvalues().to_vec()
    }

    pub fn lambda2(&self) -> f64 {
        self.inner.lambda2()
    }

    #[wasm_bindgen(js_name = trainEpoch)]
    pub fn train_epoch(&mut self) -> Result<Vec<f64>, JsError> {
        self.inner.train_epoch().map(|r| r.to_vec()).map_err(|e| JsError::new(&e))
    }

    pub fn simulate(&self) -> Vec<f64> {
        self.inner.simulate()
    }
}
