//! Columnar binary draw files.
//!
//! All integers and floats little-endian. Layout, version 1:
//!
//! ```text
//! magic      8 bytes  "ARLBSGD\0"
//! version    u32
//! n, T, p, H u32 x 4
//! flags      u32      bit 0: latents present
//! n_draws    u64
//! n_cells    u64
//! cells      u64 x n_cells            observed cell indices i*T+t
//! per draw:
//!   iteration                 u64
//!   s                         u16 x n*T   (i*T+t, 0-based labels)
//!   alpha psi tau_sq phi rho_sq  f64 x 5
//!   theta                     f64 x H
//!   sigma_sq                  f64 x H
//!   beta                      f64 x p
//!   gamma                     f64 x n
//!   [lambda f64 x H, eps f64 x H*T, xi f64 x H*T]   if flag bit 0
//!   loglik                    f64 x n_cells
//! ```
//!
//! Timing, acceptance rates and warnings live in the run manifest, keeping the
//! draw file a pure function of (config, data, seed).

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::model::{Latents, PosteriorDraws, RetainedDraw};

pub const MAGIC: &[u8; 8] = b"ARLBSGD\0";
pub const VERSION: u32 = 1;
const FLAG_LATENTS: u32 = 1;

fn put_u32<W: Write>(w: &mut W, v: u32) -> Result<()> {
    Ok(w.write_all(&v.to_le_bytes())?)
}

fn put_u64<W: Write>(w: &mut W, v: u64) -> Result<()> {
    Ok(w.write_all(&v.to_le_bytes())?)
}

fn put_f64s<W: Write>(w: &mut W, v: &[f64]) -> Result<()> {
    for x in v {
        w.write_all(&x.to_le_bytes())?;
    }
    Ok(())
}

fn dim(v: usize, what: &str) -> Result<u32> {
    u32::try_from(v).map_err(|_| Error::Format(format!("{what} = {v} does not fit the draw format")))
}

pub fn write_draws<W: Write>(draws: &PosteriorDraws, mut w: W) -> Result<()> {
    let (n, times, p, h) = (draws.n, draws.times, draws.p, draws.h);
    let latents = draws.draws.first().is_some_and(|d| d.latents.is_some());
    w.write_all(MAGIC)?;
    put_u32(&mut w, VERSION)?;
    for (v, what) in [(n, "n"), (times, "T"), (p, "p"), (h, "H")] {
        put_u32(&mut w, dim(v, what)?)?;
    }
    put_u32(&mut w, if latents { FLAG_LATENTS } else { 0 })?;
    put_u64(&mut w, draws.len() as u64)?;
    put_u64(&mut w, draws.cells.len() as u64)?;
    for &c in &draws.cells {
        put_u64(&mut w, c as u64)?;
    }
    for (d, draw) in draws.draws.iter().enumerate() {
        let shapes_ok = draw.s.len() == n * times
            && draw.theta.len() == h
            && draw.sigma_sq.len() == h
            && draw.beta.len() == p
            && draw.gamma.len() == n
            && draw.latents.is_some() == latents
            && draw
                .latents
                .as_ref()
                .is_none_or(|l| l.lambda.len() == h && l.eps.len() == h * times && l.xi.len() == h * times);
        if !shapes_ok {
            return Err(Error::Format(format!("draw {d} does not match the declared dimensions")));
        }
        put_u64(&mut w, draw.iteration)?;
        for &s in &draw.s {
            w.write_all(&s.to_le_bytes())?;
        }
        put_f64s(&mut w, &[draw.alpha, draw.psi, draw.tau_sq, draw.phi, draw.rho_sq])?;
        put_f64s(&mut w, &draw.theta)?;
        put_f64s(&mut w, &draw.sigma_sq)?;
        put_f64s(&mut w, &draw.beta)?;
        put_f64s(&mut w, &draw.gamma)?;
        if let Some(l) = &draw.latents {
            put_f64s(&mut w, &l.lambda)?;
            put_f64s(&mut w, &l.eps)?;
            put_f64s(&mut w, &l.xi)?;
        }
        put_f64s(&mut w, draws.loglik_row(d))?;
    }
    w.flush()?;
    Ok(())
}

pub fn save_draws(draws: &PosteriorDraws, path: impl AsRef<Path>) -> Result<()> {
    write_draws(draws, BufWriter::new(File::create(path)?))
}

struct Cursor<R> {
    inner: R,
}

impl<R: Read> Cursor<R> {
    fn bytes<const N: usize>(&mut self) -> Result<[u8; N]> {
        let mut b = [0u8; N];
        self.inner.read_exact(&mut b).map_err(|e| match e.kind() {
            std::io::ErrorKind::UnexpectedEof => Error::Format("truncated draw file".into()),
            _ => Error::Io(e),
        })?;
        Ok(b)
    }

    fn u32(&mut self) -> Result<u32> {
        self.bytes::<4>().map(u32::from_le_bytes)
    }

    fn u64(&mut self) -> Result<u64> {
        self.bytes::<8>().map(u64::from_le_bytes)
    }

    fn f64s(&mut self, len: usize) -> Result<Vec<f64>> {
        (0..len).map(|_| self.bytes::<8>().map(f64::from_le_bytes)).collect()
    }
}

/// Reads a draw file. Acceptance, timing and warnings are left empty.
pub fn read_draws<R: Read>(reader: R) -> Result<PosteriorDraws> {
    let mut r = Cursor { inner: reader };
    if &r.bytes::<8>()? != MAGIC {
        return Err(Error::Format("not a draw file (bad magic)".into()));
    }
    let version = r.u32()?;
    if version != VERSION {
        return Err(Error::Format(format!("unsupported draw file version {version}")));
    }
    let n = r.u32()? as usize;
    let times = r.u32()? as usize;
    let p = r.u32()? as usize;
    let h = r.u32()? as usize;
    let flags = r.u32()?;
    if flags & !FLAG_LATENTS != 0 {
        return Err(Error::Format(format!("unknown flags {flags:#x}")));
    }
    let latents = flags & FLAG_LATENTS != 0;
    let n_draws = r.u64()? as usize;
    let n_cells = r.u64()? as usize;
    if n_cells > n * times {
        return Err(Error::Format("more log-likelihood cells than panel cells".into()));
    }
    let cells: Vec<usize> = (0..n_cells).map(|_| r.u64().map(|c| c as usize)).collect::<Result<_>>()?;
    if cells.iter().any(|&c| c >= n * times) {
        return Err(Error::Format("cell index outside the panel".into()));
    }
    let mut draws = Vec::with_capacity(n_draws.min(1 << 20));
    let mut loglik = Vec::new();
    for _ in 0..n_draws {
        let iteration = r.u64()?;
        let s: Vec<u16> = (0..n * times).map(|_| r.bytes::<2>().map(u16::from_le_bytes)).collect::<Result<_>>()?;
        if s.iter().any(|&l| l as usize >= h) {
            return Err(Error::Format(format!("label outside 0..{h} in draw at iteration {iteration}")));
        }
        let sc = r.f64s(5)?;
        let theta = r.f64s(h)?;
        let sigma_sq = r.f64s(h)?;
        let beta = r.f64s(p)?;
        let gamma = r.f64s(n)?;
        let lat = if latents {
            Some(Latents { lambda: r.f64s(h)?, eps: r.f64s(h * times)?, xi: r.f64s(h * times)? })
        } else {
            None
        };
        loglik.extend(r.f64s(n_cells)?);
        draws.push(RetainedDraw {
            iteration,
            s,
            alpha: sc[0],
            psi: sc[1],
            tau_sq: sc[2],
            phi: sc[3],
            rho_sq: sc[4],
            theta,
            sigma_sq,
            beta,
            gamma,
            latents: lat,
        });
    }
    let mut probe = [0u8; 1];
    if r.inner.read(&mut probe)? != 0 {
        return Err(Error::Format("trailing bytes after the last draw".into()));
    }
    Ok(PosteriorDraws {
        n,
        times,
        h,
        p,
        draws,
        cells,
        loglik,
        acceptance: Default::default(),
        sampling_seconds: 0.0,
        warnings: Vec::new(),
    })
}

pub fn load_draws(path: impl AsRef<Path>) -> Result<PosteriorDraws> {
    read_draws(BufReader::new(File::open(path)?))
}

/// CSV export: one row per draw of scalar and vector parameters.
pub fn write_parameter_csv<W: Write>(draws: &PosteriorDraws, w: W) -> Result<()> {
    use super::panel::csv_err;
    let mut out = csv::Writer::from_writer(w);
    let mut header: Vec<String> =
        ["iteration", "alpha", "psi", "tau_sq", "phi_km", "rho_sq"].map(String::from).to_vec();
    header.extend((0..draws.h).map(|k| format!("theta_{k}")));
    header.extend((0..draws.h).map(|k| format!("sigma_sq_{k}")));
    header.extend((0..draws.p).map(|j| format!("beta_{j}")));
    header.extend((0..draws.n).map(|i| format!("gamma_{i}")));
    out.write_record(&header).map_err(csv_err)?;
    for d in &draws.draws {
        let mut rec = vec![d.iteration.to_string()];
        rec.extend([d.alpha, d.psi, d.tau_sq, d.phi, d.rho_sq].iter().map(f64::to_string));
        for v in d.theta.iter().chain(&d.sigma_sq).chain(&d.beta).chain(&d.gamma) {
            rec.push(v.to_string());
        }
        out.write_record(&rec).map_err(csv_err)?;
    }
    out.flush()?;
    Ok(())
}

/// CSV export of memberships: one row per (draw, time), one column per station.
pub fn write_membership_csv<W: Write>(draws: &PosteriorDraws, station_ids: &[String], w: W) -> Result<()> {
    use super::panel::csv_err;
    if station_ids.len() != draws.n {
        return Err(Error::input("station id count does not match the draws"));
    }
    let mut out = csv::Writer::from_writer(w);
    let mut header = vec!["iteration".to_string(), "time_index".to_string()];
    header.extend(station_ids.iter().cloned());
    out.write_record(&header).map_err(csv_err)?;
    for d in &draws.draws {
        for t in 0..draws.times {
            let mut rec = vec![d.iteration.to_string(), t.to_string()];
            rec.extend((0..draws.n).map(|i| d.label(draws.times, i, t).to_string()));
            out.write_record(&rec).map_err(csv_err)?;
        }
    }
    out.flush()?;
    Ok(())
}
