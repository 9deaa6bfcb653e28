use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use super::SigError;

/// Uniform sampling grid: samples at `t0 + k*step` for `k = 0..n_steps`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeGrid {
    t0: f64,
    step: f64,
    n_steps: usize,
}

impl TimeGrid {
    pub fn new(t0: f64, step: f64, n_steps: usize) -> Result<Self, SigError> {
        if !(step > 0.0) || !step.is_finite() || !t0.is_finite() {
            return Err(SigError::Range(format!("bad grid step {step}")));
        }
        if n_steps < 1 {
            return Err(SigError::Range("grid needs at least one sample".into()));
        }
        Ok(Self { t0, step, n_steps })
    }

    /// Grid covering `[t0, t0 + span]` at `step`, span rounded to whole steps.
    pub fn span(t0: f64, step: f64, span: f64) -> Result<Self, SigError> {
        let n = (span / step).round() as usize;
        Self::new(t0, step, n + 1)
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn n_steps(&self) -> usize {
        self.n_steps
    }

    pub fn t_end(&self) -> f64 {
        self.time_at(self.n_steps - 1)
    }

    pub fn time_at(&self, k: usize) -> f64 {
        self.t0 + k as f64 * self.step
    }

    /// Nearest grid index for `t`. Errors when `t` falls outside the grid by
    /// more than half a step.
    pub fn index_of(&self, t: f64) -> Result<usize, SigError> {
        let k = ((t - self.t0) / self.step).round();
        if k < -0.5 || k > (self.n_steps - 1) as f64 + 0.5 || !k.is_finite() {
            return Err(SigError::Range(format!(
                "t={t} outside grid [{}, {}]",
                self.t0,
                self.t_end()
            )));
        }
        Ok(k.max(0.0) as usize)
    }

    pub fn times(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n_steps).map(|k| self.time_at(k))
    }
}

/// Vector time series on a [`TimeGrid`], stored sample-major.
#[derive(Debug, Clone, PartialEq)]
pub struct SignalTrace {
    grid: TimeGrid,
    dim: usize,
    data: Vec<f64>,
}

impl SignalTrace {
    pub fn new(grid: TimeGrid, dim: usize, data: Vec<f64>) -> Result<Self, SigError> {
        if dim == 0 {
            return Err(SigError::Dimension("trace dim must be >= 1".into()));
        }
        if data.len() != grid.n_steps * dim {
            return Err(SigError::Dimension(format!(
                "expected {} samples * {} dims, got {} values",
                grid.n_steps,
                dim,
                data.len()
            )));
        }
        if let Some(k) = data.iter().position(|v| !v.is_finite()) {
            return Err(SigError::NonFinite(k));
        }
        Ok(Self { grid, dim, data })
    }

    /// Sample a closure over the grid; `f` receives the sample time.
    pub fn from_fn(
        grid: TimeGrid,
        dim: usize,
        f: impl Fn(f64) -> Vec<f64>,
    ) -> Result<Self, SigError> {
        let mut data = Vec::with_capacity(grid.n_steps * dim);
        for t in grid.times() {
            let v = f(t);
            assert_eq!(v.len(), dim, "sampler returned wrong dimension");
            data.extend_from_slice(&v);
        }
        Self::new(grid, dim, data)
    }

    pub fn scalar_from_fn(grid: TimeGrid, f: impl Fn(f64) -> f64) -> Result<Self, SigError> {
        Self::from_fn(grid, 1, |t| vec![f(t)])
    }

    /// Stack scalar traces (shared grid) into one vector trace.
    pub fn stack(parts: &[&SignalTrace]) -> Result<Self, SigError> {
        let grid = parts
            .first()
            .ok_or_else(|| SigError::Dimension("stack of zero traces".into()))?
            .grid;
        let dim: usize = parts.iter().map(|p| p.dim).sum();
        let mut data = Vec::with_capacity(grid.n_steps * dim);
        for k in 0..grid.n_steps {
            for p in parts {
                if p.grid != grid {
                    return Err(SigError::GridMismatch("stack on differing grids".into()));
                }
                data.extend_from_slice(p.sample(k));
            }
        }
        Self::new(grid, dim, data)
    }

    pub fn grid(&self) -> &TimeGrid {
        &self.grid
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn sample(&self, k: usize) -> &[f64] {
        &self.data[k * self.dim..(k + 1) * self.dim]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    /// Scalar-trace value at sample `k` (dim must be 1).
    pub fn value(&self, k: usize) -> f64 {
        debug_assert_eq!(self.dim, 1);
        self.data[k]
    }

    /// Keep every `stride`-th sample (diagnostics on long traces).
    pub fn decimate(&self, stride: usize) -> SignalTrace {
        assert!(stride >= 1);
        let kept: Vec<usize> = (0..self.grid.n_steps).step_by(stride).collect();
        let grid = TimeGrid::new(self.grid.t0, self.grid.step * stride as f64, kept.len())
            .expect("valid grid");
        let mut data = Vec::with_capacity(kept.len() * self.dim);
        for k in kept {
            data.extend_from_slice(self.sample(k));
        }
        SignalTrace {
            grid,
            dim: self.dim,
            data,
        }
    }

    pub fn component(&self, i: usize) -> SignalTrace {
        assert!(i < self.dim);
        let data = (0..self.grid.n_steps)
            .map(|k| self.data[k * self.dim + i])
            .collect();
        SignalTrace {
            grid: self.grid,
            dim: 1,
            data,
        }
    }
}

/// Write a trace as CSV with header `t,x1,...,xd` at full double precision
/// (17 significant digits; values round-trip bit-exactly).
pub fn write_trace_csv(trace: &SignalTrace, path: &Path) -> Result<(), SigError> {
    let mut w = BufWriter::new(std::fs::File::create(path)?);
    write!(w, "t")?;
    for i in 1..=trace.dim() {
        write!(w, ",x{i}")?;
    }
    writeln!(w)?;
    for k in 0..trace.grid().n_steps() {
        write!(w, "{:.16e}", trace.grid().time_at(k))?;
        for v in trace.sample(k) {
            write!(w, ",{v:.16e}")?;
        }
        writeln!(w)?;
    }
    w.flush()?;
    Ok(())
}

/// Read a trace written by [`write_trace_csv`]. The time column must be a
/// uniform grid; the step is inferred from the first two rows.
pub fn read_trace_csv(path: &Path) -> Result<SignalTrace, SigError> {
    let f = BufReader::new(std::fs::File::open(path)?);
    let mut lines = f.lines();
    let header = lines
        .next()
        .ok_or_else(|| SigError::Csv("empty file".into()))??;
    let dim = header.split(',').count().saturating_sub(1);
    if dim == 0 || !header.starts_with('t') {
        return Err(SigError::Csv(format!("bad header `{header}`")));
    }
    let mut times = Vec::new();
    let mut data = Vec::new();
    for (lineno, line) in lines.enumerate() {
        let line = line?;
        if line.is_empty() {
            continue;
        }
        let mut fields = line.split(',');
        let t: f64 = fields
            .next()
            .unwrap()
            .parse()
            .map_err(|e| SigError::Csv(format!("line {}: {e}", lineno + 2)))?;
        times.push(t);
        let mut count = 0;
        for fld in fields {
            let v: f64 = fld
                .parse()
                .map_err(|e| SigError::Csv(format!("line {}: {e}", lineno + 2)))?;
            data.push(v);
            count += 1;
        }
        if count != dim {
            return Err(SigError::Csv(format!(
                "line {}: expected {} values, got {}",
                lineno + 2,
                dim,
                count
            )));
        }
    }
    if times.len() < 2 {
        return Err(SigError::Csv("need at least two rows".into()));
    }
    let step = times[1] - times[0];
    let grid = TimeGrid::new(times[0], step, times.len())?;
    for (k, t) in times.iter().enumerate() {
        if (t - grid.time_at(k)).abs() > 1e-9 * (1.0 + t.abs()) {
            return Err(SigError::Csv(format!("non-uniform time column at row {k}")));
        }
    }
    SignalTrace::new(grid, dim, data)
}
