//! Flat `key = value` run configuration.
//!
//! Blank lines and `#` comments are ignored. Every key is optional and falls
//! back to the default listed in [`KEYS`]; the resolved values are written
//! back into the manifest so no default stays hidden. Unknown or repeated
//! keys are errors.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use floquet_core::extended::MAX_TRUNCATION;
use floquet_core::linalg::C64;
use floquet_core::topology::InvariantOptions;
use floquet_core::wavepacket::WavePacketSpec;
use floquet_core::ModelParams;
use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Spectrum,
    Trajectory,
    Density,
    Invariants,
    PhaseDiagram,
    Validate,
    ReproduceFigures,
}

impl Command {
    pub const ALL: [Command; 7] = [
        Command::Spectrum,
        Command::Trajectory,
        Command::Density,
        Command::Invariants,
        Command::PhaseDiagram,
        Command::Validate,
        Command::ReproduceFigures,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Command::Spectrum => "spectrum",
            Command::Trajectory => "trajectory",
            Command::Density => "density",
            Command::Invariants => "invariants",
            Command::PhaseDiagram => "phase-diagram",
            Command::Validate => "validate",
            Command::ReproduceFigures => "reproduce-figures",
        }
    }
}

impl fmt::Display for Command {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Command {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Command::ALL.into_iter().find(|c| c.name() == s).ok_or_else(|| {
            let names: Vec<_> = Command::ALL.iter().map(|c| c.name()).collect();
            format!("unknown command '{s}' (expected one of {})", names.join(", "))
        })
    }
}

/// Every accepted key with its default, in manifest order. An empty default
/// means "derived from other keys".
pub const KEYS: &[(&str, &str)] = &[
    ("command", ""),
    ("j1", "1.0"),
    ("j2", "1.5"),
    ("amp", "1.0"),
    ("omega", "5.5"),
    ("truncation", "10"),
    ("steps_per_period", "2000"),
    ("kgrid_size", "512"),
    ("drift_tol", "1e-10"),
    ("closure_threshold", "0.05"),
    ("k_points", "201"),
    ("replicas", "1"),
    ("width", "10.0"),
    ("k0", "0.0"),
    ("spinor", "1,0,0,0"),
    ("cells", "400"),
    ("center", ""),
    ("duration", "25.0"),
    ("dt", ""),
    ("density_stride", "4"),
    ("amp_min", "0.0"),
    ("amp_max", "8.0"),
    ("amp_count", "17"),
    ("omega_min", "2.0"),
    ("omega_max", "10.0"),
    ("omega_count", "17"),
];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Numerics {
    pub truncation: usize,
    pub steps_per_period: usize,
    pub kgrid_size: usize,
    pub drift_tol: f64,
    pub closure_threshold: f64,
}

impl Numerics {
    pub fn invariant_options(&self) -> InvariantOptions {
        InvariantOptions {
            kgrid_size: self.kgrid_size,
            steps: self.steps_per_period,
            truncation: self.truncation,
            drift_tol: self.drift_tol,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectrumConfig {
    pub k_points: usize,
    pub replicas: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PacketConfig {
    pub width: f64,
    pub k0: f64,
    /// `[Re a, Im a, Re b, Im b]`, normalized on load.
    pub spinor: [f64; 4],
    pub cells: usize,
    pub center: f64,
    pub duration: f64,
    pub dt: f64,
    pub density_stride: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepConfig {
    pub amp_min: f64,
    pub amp_max: f64,
    pub amp_count: usize,
    pub omega_min: f64,
    pub omega_max: f64,
    pub omega_count: usize,
}

impl SweepConfig {
    pub fn amps(&self) -> Vec<f64> {
        linspace(self.amp_min, self.amp_max, self.amp_count)
    }

    pub fn omegas(&self) -> Vec<f64> {
        linspace(self.omega_min, self.omega_max, self.omega_count)
    }
}

pub fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![a];
    }
    (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub command: Command,
    pub model: ModelParams,
    pub numerics: Numerics,
    pub spectrum: SpectrumConfig,
    pub packet: PacketConfig,
    pub sweep: SweepConfig,
}

impl RunConfig {
    /// Packet spec for the configured model. `center` and `dt` are already
    /// resolved, so overriding `omega` keeps them fixed.
    pub fn packet_spec(&self) -> WavePacketSpec {
        let p = &self.packet;
        let [ar, ai, br, bi] = p.spinor;
        WavePacketSpec {
            width: p.width,
            k0: p.k0,
            spinor: [C64::new(ar, ai), C64::new(br, bi)],
            cells: p.cells,
            center: p.center,
            duration: p.duration,
            dt: p.dt,
            steps_per_period: self.numerics.steps_per_period,
        }
    }

    /// Resolved configuration as flat key/value pairs, in [`KEYS`] order.
    pub fn to_pairs(&self) -> Vec<(&'static str, String)> {
        let f = |x: f64| format!("{x:?}");
        let (n, s, p, w) = (&self.numerics, &self.spectrum, &self.packet, &self.sweep);
        let spinor = p.spinor.iter().map(|x| f(*x)).collect::<Vec<_>>().join(",");
        vec![
            ("command", self.command.to_string()),
            ("j1", f(self.model.j1)),
            ("j2", f(self.model.j2)),
            ("amp", f(self.model.amp)),
            ("omega", f(self.model.omega)),
            ("truncation", n.truncation.to_string()),
            ("steps_per_period", n.steps_per_period.to_string()),
            ("kgrid_size", n.kgrid_size.to_string()),
            ("drift_tol", f(n.drift_tol)),
            ("closure_threshold", f(n.closure_threshold)),
            ("k_points", s.k_points.to_string()),
            ("replicas", s.replicas.to_string()),
            ("width", f(p.width)),
            ("k0", f(p.k0)),
            ("spinor", spinor),
            ("cells", p.cells.to_string()),
            ("center", f(p.center)),
            ("duration", f(p.duration)),
            ("dt", f(p.dt)),
            ("density_stride", p.density_stride.to_string()),
            ("amp_min", f(w.amp_min)),
            ("amp_max", f(w.amp_max)),
            ("amp_count", w.amp_count.to_string()),
            ("omega_min", f(w.omega_min)),
            ("omega_max", f(w.omega_max)),
            ("omega_count", w.omega_count.to_string()),
        ]
    }

    /// The resolved configuration in the input format.
    pub fn to_text(&self) -> String {
        self.to_pairs().into_iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
    }
}

fn parse_lines(text: &str) -> Result<BTreeMap<String, (usize, String)>, String> {
    let mut map = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let lineno = i + 1;
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| format!("line {lineno}: expected key = value, got '{line}'"))?;
        let key = key.trim();
        if !KEYS.iter().any(|(k, _)| *k == key) {
            return Err(format!("line {lineno}: unknown key '{key}'"));
        }
        if map.insert(key.to_string(), (lineno, value.trim().to_string())).is_some() {
            return Err(format!("line {lineno}: key '{key}' given twice"));
        }
    }
    Ok(map)
}

struct Reader {
    map: BTreeMap<String, (usize, String)>,
}

impl Reader {
    fn raw(&self, key: &str) -> Option<&(usize, String)> {
        self.map.get(key)
    }

    fn get<T: FromStr>(&self, key: &str) -> Result<T, String> {
        let default = KEYS.iter().find(|(k, _)| *k == key).map(|(_, d)| *d).unwrap_or("");
        let (src, value) = match self.raw(key) {
            Some((line, v)) => (format!("line {line}"), v.as_str()),
            None => ("default".to_string(), default),
        };
        value
            .parse()
            .map_err(|_| format!("{src}: cannot parse '{value}' for key '{key}'"))
    }

    fn optional<T: FromStr>(&self, key: &str) -> Result<Option<T>, String> {
        match self.raw(key) {
            Some(_) => self.get(key).map(Some),
            None => Ok(None),
        }
    }
}

fn check(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

/// Parse and validate a configuration. `command` overrides the file's
/// `command` key.
pub fn parse(text: &str, command: Option<Command>) -> Result<RunConfig, String> {
    let r = Reader { map: parse_lines(text)? };
    let command = match command {
        Some(c) => c,
        None => r
            .raw("command")
            .ok_or("no command given: set 'command' in the config or pass --command")?
            .1
            .parse()?,
    };
    let model = ModelParams::new(r.get("j1")?, r.get("j2")?, r.get("amp")?, r.get("omega")?).map_err(|e| e.to_string())?;

    let numerics = Numerics {
        truncation: r.get("truncation")?,
        steps_per_period: r.get("steps_per_period")?,
        kgrid_size: r.get("kgrid_size")?,
        drift_tol: r.get("drift_tol")?,
        closure_threshold: r.get("closure_threshold")?,
    };
    check((1..=MAX_TRUNCATION).contains(&numerics.truncation), || {
        format!("truncation must lie in 1..={MAX_TRUNCATION}")
    })?;
    check(numerics.steps_per_period >= 1, || "steps_per_period must be at least 1".into())?;
    check(numerics.kgrid_size >= 4, || "kgrid_size must be at least 4".into())?;
    check(numerics.drift_tol > 0.0 && numerics.drift_tol.is_finite(), || "drift_tol must be positive".into())?;
    check(numerics.closure_threshold >= 0.0 && numerics.closure_threshold.is_finite(), || {
        "closure_threshold must be non-negative".into()
    })?;

    let spectrum = SpectrumConfig {
        k_points: r.get("k_points")?,
        replicas: r.get("replicas")?,
    };
    check(spectrum.k_points >= 1, || "k_points must be at least 1".into())?;

    let spinor_text: String = r.get("spinor")?;
    let parts: Vec<f64> = spinor_text
        .split(',')
        .map(|s| s.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|_| format!("spinor must be four numbers 'Re a, Im a, Re b, Im b', got '{spinor_text}'"))?;
    check(parts.len() == 4, || format!("spinor needs four numbers, got {}", parts.len()))?;
    let norm = parts.iter().map(|x| x * x).sum::<f64>().sqrt();
    check(norm > 0.0 && norm.is_finite(), || "spinor must be nonzero".into())?;
    // skip the division when already normalized so resolved configs round-trip exactly
    let scale = if (norm - 1.0).abs() < 1e-15 { 1.0 } else { norm };
    let spinor = [parts[0] / scale, parts[1] / scale, parts[2] / scale, parts[3] / scale];

    let cells: usize = r.get("cells")?;
    let packet = PacketConfig {
        width: r.get("width")?,
        k0: r.get("k0")?,
        spinor,
        cells,
        center: r.optional("center")?.unwrap_or((cells / 2) as f64),
        duration: r.get("duration")?,
        dt: r.optional("dt")?.unwrap_or(model.period / 40.0),
        density_stride: r.get("density_stride")?,
    };
    check(packet.density_stride >= 1, || "density_stride must be at least 1".into())?;

    let sweep = SweepConfig {
        amp_min: r.get("amp_min")?,
        amp_max: r.get("amp_max")?,
        amp_count: r.get("amp_count")?,
        omega_min: r.get("omega_min")?,
        omega_max: r.get("omega_max")?,
        omega_count: r.get("omega_count")?,
    };
    check(sweep.amp_count >= 1 && sweep.omega_count >= 1, || "sweep counts must be at least 1".into())?;
    check(sweep.omega_min > 0.0 && sweep.omega_max >= sweep.omega_min, || {
        "omega sweep must satisfy 0 < omega_min <= omega_max".into()
    })?;
    check(sweep.amp_max >= sweep.amp_min, || "amp sweep must satisfy amp_min <= amp_max".into())?;

    let cfg = RunConfig {
        command,
        model,
        numerics,
        spectrum,
        packet,
        sweep,
    };
    if matches!(command, Command::Trajectory | Command::Density | Command::Validate | Command::ReproduceFigures) {
        cfg.packet_spec().validate().map_err(|e| e.to_string())?;
    }
    Ok(cfg)
}

/// Defaults as documented, for reference output.
pub fn defaults_text() -> String {
    KEYS.iter()
        .map(|(k, d)| {
            if d.is_empty() {
                format!("# {k} = (derived)\n")
            } else {
                format!("{k} = {d}\n")
            }
        })
        .collect()
}
