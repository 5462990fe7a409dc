//! Residual tanh network evaluated on every basis configuration.
//!
//! Two independent heads share the architecture: `D` ResBlocks
//! (`x ← x + W2·tanh(W1·x + b1) + b2`), a mean over the `L` outputs and a
//! scalar affine map. The amplitude is `exp(a(s) + i·φ(s))` with spins
//! encoded as `+1` (up, bit 0) and `−1` (down, bit 1).

use crate::numerics::C64;

#[derive(Clone, Copy)]
struct Dims {
    l: usize,
    w: usize,
    depth: usize,
}

impl Dims {
    fn block_len(&self) -> usize {
        2 * self.w * self.l + self.w + self.l
    }

    fn head_len(&self) -> usize {
        self.depth * self.block_len() + 2
    }
}

/// Parameter views of one block.
struct Block<'a> {
    w1: &'a [f64],
    b1: &'a [f64],
    w2: &'a [f64],
    b2: &'a [f64],
}

fn block(d: Dims, head: &[f64], k: usize) -> Block<'_> {
    let base = k * d.block_len();
    let (wl, w, l) = (d.w * d.l, d.w, d.l);
    Block {
        w1: &head[base..base + wl],
        b1: &head[base + wl..base + wl + w],
        w2: &head[base + wl + w..base + 2 * wl + w],
        b2: &head[base + 2 * wl + w..base + 2 * wl + w + l],
    }
}

fn spins(basis: usize, l: usize, out: &mut [f64]) {
    for (j, s) in out.iter_mut().enumerate().take(l) {
        *s = if basis >> j & 1 == 0 { 1.0 } else { -1.0 };
    }
}

/// Forward pass of one head, recording block inputs and hidden activations.
fn head_forward(d: Dims, head: &[f64], x: &mut [f64], inputs: &mut [f64], hidden: &mut [f64]) -> (f64, f64) {
    for k in 0..d.depth {
        let b = block(d, head, k);
        inputs[k * d.l..(k + 1) * d.l].copy_from_slice(x);
        let h = &mut hidden[k * d.w..(k + 1) * d.w];
        for (i, hi) in h.iter_mut().enumerate() {
            let row = &b.w1[i * d.l..(i + 1) * d.l];
            let z: f64 = b.b1[i] + row.iter().zip(x.iter()).map(|(a, c)| a * c).sum::<f64>();
            *hi = z.tanh();
        }
        for (j, xj) in x.iter_mut().enumerate() {
            let row = &b.w2[j * d.w..(j + 1) * d.w];
            *xj += b.b2[j] + row.iter().zip(h.iter()).map(|(a, c)| a * c).sum::<f64>();
        }
    }
    let mean = x.iter().sum::<f64>() / d.l as f64;
    let tail = &head[d.depth * d.block_len()..];
    (tail[0] * mean + tail[1], mean)
}

#[allow(clippy::too_many_arguments)]
fn head_backward(
    d: Dims,
    head: &[f64],
    grad: &mut [f64],
    delta: f64,
    mean: f64,
    inputs: &[f64],
    hidden: &[f64],
    dx: &mut [f64],
    dh: &mut [f64],
) {
    let tail = d.depth * d.block_len();
    grad[tail] += delta * mean;
    grad[tail + 1] += delta;
    let dm = delta * head[tail] / d.l as f64;
    dx.iter_mut().for_each(|v| *v = dm);
    let (wl, w) = (d.w * d.l, d.w);
    for k in (0..d.depth).rev() {
        let b = block(d, head, k);
        let base = k * d.block_len();
        let x_in = &inputs[k * d.l..(k + 1) * d.l];
        let h = &hidden[k * d.w..(k + 1) * d.w];
        // y = W2 h + b2 with upstream dx.
        dh.iter_mut().for_each(|v| *v = 0.0);
        for j in 0..d.l {
            let dy = dx[j];
            grad[base + 2 * wl + w + j] += dy;
            let g_row = &mut grad[base + wl + w + j * d.w..base + wl + w + (j + 1) * d.w];
            let w_row = &b.w2[j * d.w..(j + 1) * d.w];
            for i in 0..d.w {
                g_row[i] += dy * h[i];
                dh[i] += w_row[i] * dy;
            }
        }
        for i in 0..d.w {
            let dz = dh[i] * (1.0 - h[i] * h[i]);
            grad[base + wl + i] += dz;
            let g_row = &mut grad[base + i * d.l..base + (i + 1) * d.l];
            let w_row = &b.w1[i * d.l..(i + 1) * d.l];
            for j in 0..d.l {
                g_row[j] += dz * x_in[j];
                dx[j] += w_row[j] * dz;
            }
        }
    }
}

struct Scratch {
    x: Vec<f64>,
    inputs: Vec<f64>,
    hidden: Vec<f64>,
}

impl Scratch {
    fn new(d: Dims) -> Self {
        Self {
            x: vec![0.0; d.l],
            inputs: vec![0.0; d.depth * d.l],
            hidden: vec![0.0; d.depth * d.w],
        }
    }
}

pub(super) fn forward(l: usize, w: usize, depth: usize, theta: &[f64]) -> Vec<C64> {
    let d = Dims { l, w, depth };
    let (amp, phase) = theta.split_at(d.head_len());
    let mut sc = Scratch::new(d);
    (0..1usize << l)
        .map(|b| {
            spins(b, l, &mut sc.x);
            let (a, _) = head_forward(d, amp, &mut sc.x, &mut sc.inputs, &mut sc.hidden);
            spins(b, l, &mut sc.x);
            let (phi, _) = head_forward(d, phase, &mut sc.x, &mut sc.inputs, &mut sc.hidden);
            C64::from_polar(a.exp(), phi)
        })
        .collect()
}

pub(super) fn pullback(l: usize, w: usize, depth: usize, theta: &[f64], cot: &[C64]) -> Vec<f64> {
    let d = Dims { l, w, depth };
    let hl = d.head_len();
    let (amp, phase) = theta.split_at(hl);
    let mut grad = vec![0.0; theta.len()];
    let (g_amp, g_phase) = grad.split_at_mut(hl);
    let mut sa = Scratch::new(d);
    let mut sp = Scratch::new(d);
    let mut dx = vec![0.0; l];
    let mut dh = vec![0.0; w];
    for (b, g) in cot.iter().enumerate() {
        spins(b, l, &mut sa.x);
        let (a, mean_a) = head_forward(d, amp, &mut sa.x, &mut sa.inputs, &mut sa.hidden);
        spins(b, l, &mut sp.x);
        let (phi, mean_p) = head_forward(d, phase, &mut sp.x, &mut sp.inputs, &mut sp.hidden);
        let psi = C64::from_polar(a.exp(), phi);
        // dψ = ψ (da + i dφ); dL = Re(conj(g) dψ).
        let t = g.conj() * psi;
        let delta_a = t.re;
        let delta_p = -t.im;
        head_backward(d, amp, g_amp, delta_a, mean_a, &sa.inputs, &sa.hidden, &mut dx, &mut dh);
        head_backward(d, phase, g_phase, delta_p, mean_p, &sp.inputs, &sp.hidden, &mut dx, &mut dh);
    }
    grad
}
