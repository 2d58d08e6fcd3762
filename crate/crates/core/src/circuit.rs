//! Brick-wall circuits of nearest-neighbor two-qubit gates.
//!
//! Layers alternate between even and odd wire offsets. Gate tensors carry
//! legs `(o1, o2, i1, i2)` with the first slot on the lower wire index; the
//! matrix view groups rows as `(o1 o2)` and columns as `(i1 i2)`.

use std::io::{BufRead, Write};

use num_complex::Complex64;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha12Rng;

use crate::error::{QpdeError, Result};
use crate::mpo::Mpo;
use crate::mps::{Mps, Truncation};
use crate::tensor::DenseTensor;

type C64 = Complex64;

/// One brick-wall layer: gates at wires `(offset + 2k, offset + 2k + 1)`.
#[derive(Clone, Debug)]
pub struct Layer {
    pub offset: usize,
    pub gates: Vec<DenseTensor>,
}

impl Layer {
    pub fn wire_of(&self, k: usize) -> usize {
        self.offset + 2 * k
    }
}

#[derive(Clone, Debug)]
pub struct BrickWallCircuit {
    width: usize,
    layers: Vec<Layer>,
}

fn gate_count(width: usize, offset: usize) -> usize {
    if width < 2 + offset {
        0
    } else {
        (width - offset) / 2
    }
}

impl BrickWallCircuit {
    pub fn identity(width: usize, depth: usize, first_offset: usize) -> Self {
        let eye4 = DenseTensor::eye(4).reshape(&[2, 2, 2, 2]).unwrap();
        let layers = (0..depth)
            .map(|l| {
                let offset = (first_offset + l) % 2;
                Layer { offset, gates: vec![eye4.clone(); gate_count(width, offset)] }
            })
            .collect();
        BrickWallCircuit { width, layers }
    }

    pub fn from_layers(width: usize, layers: Vec<Layer>) -> Result<Self> {
        for (l, layer) in layers.iter().enumerate() {
            if layer.gates.len() != gate_count(width, layer.offset) {
                return Err(QpdeError::ShapeMismatch(format!(
                    "layer {l} has {} gates, want {}",
                    layer.gates.len(),
                    gate_count(width, layer.offset)
                )));
            }
            for g in &layer.gates {
                if g.shape() != [2, 2, 2, 2] {
                    return Err(QpdeError::ShapeMismatch("gate must be (2,2,2,2)".into()));
                }
            }
        }
        Ok(BrickWallCircuit { width, layers })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn depth(&self) -> usize {
        self.layers.len()
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn gate(&self, layer: usize, k: usize) -> &DenseTensor {
        &self.layers[layer].gates[k]
    }

    pub fn set_gate(&mut self, layer: usize, k: usize, g: DenseTensor) {
        self.layers[layer].gates[k] = g;
    }

    /// Gates acting on `(wire, wire+1)`, as `(layer, slot)` pairs bottom-to-top.
    pub fn gates_at_wire(&self, wire: usize) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for (l, layer) in self.layers.iter().enumerate() {
            if wire >= layer.offset && (wire - layer.offset) % 2 == 0 {
                let k = (wire - layer.offset) / 2;
                if k < layer.gates.len() {
                    out.push((l, k));
                }
            }
        }
        out
    }

    pub fn total_gates(&self) -> usize {
        self.layers.iter().map(|l| l.gates.len()).sum()
    }

    /// Stack `above` on top of this circuit (applied after it).
    pub fn stacked(&self, above: &BrickWallCircuit) -> Result<BrickWallCircuit> {
        if self.width != above.width {
            return Err(QpdeError::ShapeMismatch("stack on unequal widths".into()));
        }
        let mut layers = self.layers.clone();
        layers.extend(above.layers.iter().cloned());
        Ok(BrickWallCircuit { width: self.width, layers })
    }

    /// Apply the circuit to a state, layer by layer.
    pub fn apply_to_mps(&self, input: &Mps, tr: Truncation) -> Result<(Mps, f64)> {
        if input.len() != self.width {
            return Err(QpdeError::ShapeMismatch("circuit width vs state length".into()));
        }
        let mut out = input.clone();
        let mut err_sq = 0.0;
        for layer in &self.layers {
            for (k, g) in layer.gates.iter().enumerate() {
                let e = out.apply_two_site(g, layer.wire_of(k), tr)?;
                err_sq += e * e;
            }
        }
        Ok((out, err_sq.sqrt()))
    }

    /// Apply the adjoint circuit to a state (layers reversed, gates daggered).
    pub fn apply_adjoint_to_mps(&self, input: &Mps, tr: Truncation) -> Result<(Mps, f64)> {
        if input.len() != self.width {
            return Err(QpdeError::ShapeMismatch("circuit width vs state length".into()));
        }
        let mut out = input.clone();
        let mut err_sq = 0.0;
        for layer in self.layers.iter().rev() {
            for (k, g) in layer.gates.iter().enumerate() {
                let gd = g.conj().permute(&[2, 3, 0, 1]);
                let e = out.apply_two_site(&gd, layer.wire_of(k), tr)?;
                err_sq += e * e;
            }
        }
        Ok((out, err_sq.sqrt()))
    }

    /// Exact MPO of the circuit when `tr` is exact; compressed otherwise.
    pub fn to_mpo(&self, tr: Truncation) -> Result<(Mpo, f64)> {
        let mut mpo = Mpo::identity(self.width);
        let mut err_sq = 0.0;
        for layer in &self.layers {
            for (k, g) in layer.gates.iter().enumerate() {
                let e = mpo.apply_gate_out(g, layer.wire_of(k), 2, tr)?;
                err_sq += e * e;
            }
        }
        Ok((mpo, err_sq.sqrt()))
    }
}

/// Brick-wall circuit of identity gates perturbed by `epsilon`, projected
/// back to the unitary manifold through the SVD factor. `epsilon = 0` gives
/// the exact identity circuit; a fixed seed gives a bit-identical circuit.
pub fn init_brickwall(
    width: usize,
    depth: usize,
    epsilon: f64,
    seed: u64,
    first_offset: usize,
) -> BrickWallCircuit {
    let mut circ = BrickWallCircuit::identity(width, depth, first_offset);
    if epsilon == 0.0 {
        return circ;
    }
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    for l in 0..circ.depth() {
        for k in 0..circ.layers[l].gates.len() {
            let mut g = DenseTensor::eye(4);
            for v in g.data_mut() {
                let re: f64 = rng.sample(rand_distr::StandardNormal);
                let im: f64 = rng.sample(rand_distr::StandardNormal);
                *v += C64::new(epsilon * re, epsilon * im);
            }
            let u = crate::compress::svd_unitary(&g).expect("perturbed identity is full rank");
            circ.layers[l].gates[k] = u.reshape(&[2, 2, 2, 2]).unwrap();
        }
    }
    circ
}

/// Plain-text gate list: one two-qubit unitary per line with its wire pair,
/// row-major complex entries. Replayable without this crate.
pub fn export_gate_list<W: Write>(c: &BrickWallCircuit, mut w: W) -> Result<()> {
    writeln!(w, "# brick-wall gate list v1")?;
    writeln!(w, "width {}", c.width())?;
    writeln!(w, "depth {}", c.depth())?;
    for layer in c.layers() {
        for (k, g) in layer.gates.iter().enumerate() {
            let wire = layer.wire_of(k);
            write!(w, "u4 {} {}", wire, wire + 1)?;
            for v in g.data() {
                write!(w, " {:.17e} {:.17e}", v.re, v.im)?;
            }
            writeln!(w)?;
        }
    }
    Ok(())
}

/// Binary circuit container (little-endian doubles), see `save_circuit`.
pub fn save_circuit<W: Write>(c: &BrickWallCircuit, mut w: W) -> Result<()> {
    w.write_all(b"QBW1")?;
    w.write_all(&(c.width() as u32).to_le_bytes())?;
    w.write_all(&(c.depth() as u32).to_le_bytes())?;
    for layer in c.layers() {
        w.write_all(&(layer.offset as u32).to_le_bytes())?;
        w.write_all(&(layer.gates.len() as u32).to_le_bytes())?;
        for g in &layer.gates {
            for v in g.data() {
                w.write_all(&v.re.to_le_bytes())?;
                w.write_all(&v.im.to_le_bytes())?;
            }
        }
    }
    Ok(())
}

pub fn load_circuit<R: BufRead>(mut r: R) -> Result<BrickWallCircuit> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != b"QBW1" {
        return Err(QpdeError::ShapeMismatch("bad circuit magic".into()));
    }
    let mut b4 = [0u8; 4];
    r.read_exact(&mut b4)?;
    let width = u32::from_le_bytes(b4) as usize;
    r.read_exact(&mut b4)?;
    let depth = u32::from_le_bytes(b4) as usize;
    let mut layers = Vec::with_capacity(depth);
    let mut b8 = [0u8; 8];
    for _ in 0..depth {
        r.read_exact(&mut b4)?;
        let offset = u32::from_le_bytes(b4) as usize;
        r.read_exact(&mut b4)?;
        let ngates = u32::from_le_bytes(b4) as usize;
        let mut gates = Vec::with_capacity(ngates);
        for _ in 0..ngates {
            let mut data = Vec::with_capacity(16);
            for _ in 0..16 {
                r.read_exact(&mut b8)?;
                let re = f64::from_le_bytes(b8);
                r.read_exact(&mut b8)?;
                let im = f64::from_le_bytes(b8);
                data.push(C64::new(re, im));
            }
            gates.push(DenseTensor::from_data(&[2, 2, 2, 2], data)?);
        }
        layers.push(Layer { offset, gates });
    }
    BrickWallCircuit::from_layers(width, layers)
}
