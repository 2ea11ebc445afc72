//! Second-order forward-mode differentiation in two variables.

use std::ops::{Add, Div, Mul, Neg, Sub};

/// A scalar with its gradient and Hessian with respect to `(k_x, k_y)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jet2 {
    pub v: f64,
    pub g: [f64; 2],
    pub h: [[f64; 2]; 2],
}

impl Jet2 {
    pub const fn constant(v: f64) -> Self {
        Self {
            v,
            g: [0.0; 2],
            h: [[0.0; 2]; 2],
        }
    }

    /// The coordinate `k_axis` evaluated at `v`.
    pub fn var(v: f64, axis: usize) -> Self {
        let mut g = [0.0; 2];
        g[axis] = 1.0;
        Self {
            v,
            g,
            h: [[0.0; 2]; 2],
        }
    }

    /// Compose with a scalar function given its value and first two
    /// derivatives at `self.v`.
    pub fn chain(self, f0: f64, f1: f64, f2: f64) -> Self {
        let mut out = Self::constant(f0);
        for a in 0..2 {
            out.g[a] = f1 * self.g[a];
            for b in a..2 {
                out.h[a][b] = f1 * self.h[a][b] + f2 * self.g[a] * self.g[b];
            }
        }
        out.h[1][0] = out.h[0][1];
        out
    }

    pub fn sin(self) -> Self {
        let (s, c) = self.v.sin_cos();
        self.chain(s, c, -s)
    }

    pub fn cos(self) -> Self {
        let (s, c) = self.v.sin_cos();
        self.chain(c, -s, -c)
    }

    pub fn recip(self) -> Self {
        let r = 1.0 / self.v;
        self.chain(r, -r * r, 2.0 * r * r * r)
    }

    /// `|x|`, differentiated away from zero.
    pub fn abs(self) -> Self {
        if self.v < 0.0 {
            -self
        } else {
            self
        }
    }

    pub fn scale(self, s: f64) -> Self {
        let mut out = self;
        out.v *= s;
        for a in 0..2 {
            out.g[a] *= s;
            for b in 0..2 {
                out.h[a][b] *= s;
            }
        }
        out
    }

    /// `w · ∇f`.
    pub fn along(&self, w: [f64; 2]) -> f64 {
        w[0] * self.g[0] + w[1] * self.g[1]
    }
}

/// Values of a vector field of jets.
pub fn values(w: &[Jet2; 2]) -> [f64; 2] {
    [w[0].v, w[1].v]
}

/// `a · ∇(b · ∇f)`, including the derivative of the field `b`.
pub fn along2(a: &[Jet2; 2], b: &[Jet2; 2], f: &Jet2) -> f64 {
    let mut out = 0.0;
    for mu in 0..2 {
        for nu in 0..2 {
            out += a[mu].v * (b[nu].g[mu] * f.g[nu] + b[nu].v * f.h[mu][nu]);
        }
    }
    out
}

impl Add for Jet2 {
    type Output = Jet2;
    fn add(self, o: Jet2) -> Jet2 {
        let mut out = self;
        out.v += o.v;
        for a in 0..2 {
            out.g[a] += o.g[a];
            for b in 0..2 {
                out.h[a][b] += o.h[a][b];
            }
        }
        out
    }
}

impl Neg for Jet2 {
    type Output = Jet2;
    fn neg(self) -> Jet2 {
        self.scale(-1.0)
    }
}

impl Sub for Jet2 {
    type Output = Jet2;
    fn sub(self, o: Jet2) -> Jet2 {
        self + (-o)
    }
}

impl Mul for Jet2 {
    type Output = Jet2;
    fn mul(self, o: Jet2) -> Jet2 {
        let mut out = Jet2::constant(self.v * o.v);
        for a in 0..2 {
            out.g[a] = self.g[a] * o.v + self.v * o.g[a];
            for b in a..2 {
                out.h[a][b] = self.h[a][b] * o.v
                    + self.g[a] * o.g[b]
                    + self.g[b] * o.g[a]
                    + self.v * o.h[a][b];
            }
        }
        out.h[1][0] = out.h[0][1];
        out
    }
}

impl Div for Jet2 {
    type Output = Jet2;
    #[allow(clippy::suspicious_arithmetic_impl)]
    fn div(self, o: Jet2) -> Jet2 {
        self * o.recip()
    }
}

impl Mul<f64> for Jet2 {
    type Output = Jet2;
    fn mul(self, s: f64) -> Jet2 {
        self.scale(s)
    }
}
