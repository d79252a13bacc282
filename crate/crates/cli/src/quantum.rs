//! Image-level commands: encode/measure, gate exploration, depth bench.

use std::f64::consts::FRAC_PI_2;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::Context as _;
use qcam_core::frqi::{self, FrqiLayout};
use qcam_core::harness;
use qcam_core::image::GrayImage;
use qcam_core::qsim::{Gate, StateVector};
use qcam_core::rng;

use crate::config::{settings, usage};
use crate::Ctx;

settings! {
    EncodeArgs => Encode {
        /// Square 8-bit PGM whose side is a power of two.
        image: PathBuf = PathBuf::new(),
        /// Measurement shots.
        shots: u64 = 8192,
    }
}

settings! {
    ExploreArgs => Explore {
        /// Square 8-bit PGM whose side is a power of two.
        image: PathBuf = PathBuf::new(),
        /// Gates as KIND:pK[=V][@ANGLE], comma separated. KIND is crx, crz,
        /// cx, cz (controlled on positional qubit pK, targeting the color
        /// qubit) or x (on pK).
        #[arg(value_delimiter = ',')]
        gates: Vec<String> = Vec::new(),
        /// Measurement shots per panel; 0 decodes exact probabilities.
        shots: u64 = 8192,
    }
}

settings! {
    BenchDepthArgs => BenchDepth {
        /// Largest number of appended privacy gates.
        max_gates: usize = 4,
        /// `default`, `reduced` or a catalog JSON file.
        catalog: String = "default".into(),
    }
}

fn load_image(path: &Path) -> anyhow::Result<(GrayImage, FrqiLayout)> {
    if path.as_os_str().is_empty() {
        return Err(usage("--image is required"));
    }
    let img = GrayImage::load_pgm(path).with_context(|| format!("reading {}", path.display()))?;
    let layout = FrqiLayout::for_side(img.side()).map_err(|e| usage(e.to_string()))?;
    Ok((img, layout))
}

pub fn encode(ctx: &Ctx, s: &Encode) -> anyhow::Result<()> {
    let (img, layout) = load_image(&s.image)?;
    if s.shots == 0 {
        return Err(usage("--shots must be positive"));
    }
    let state = frqi::prepare_state(&frqi::image_to_angles(&img)?)?;
    let hist = state.sample(s.shots, rng::derive(ctx.seed, "encode", 0))?;
    let measured = frqi::decode_histogram(&hist, layout)?;

    let clean_path = ctx.out.join("clean.pgm");
    let measured_path = ctx.out.join("measured.pgm");
    let hist_path = ctx.out.join("histogram.csv");
    img.save_pgm(&clean_path)?;
    measured.save_pgm(&measured_path)?;
    let mut f = std::io::BufWriter::new(std::fs::File::create(&hist_path)?);
    hist.write_csv(&mut f)?;
    f.flush()?;

    log::info!(
        "{}x{} image on {} qubits, {} shots: MAE {:.4}",
        layout.side(),
        layout.side(),
        layout.num_qubits(),
        s.shots,
        measured.mean_abs_error(&img)
    );
    let mut m = ctx.manifest(s)?;
    m.add_input("image", &s.image)?;
    for (name, p) in [("clean", &clean_path), ("measured", &measured_path), ("histogram", &hist_path)] {
        m.add_output(name, p)?;
    }
    ctx.save_manifest(&m)
}

/// A gate given on the command line.
#[derive(Debug, Clone, PartialEq)]
pub struct GateSpec {
    pub label: String,
    pub kind: String,
    pub position: usize,
    pub value: bool,
    pub angle: f64,
}

impl GateSpec {
    pub fn parse(text: &str) -> anyhow::Result<Self> {
        let bad = || usage(format!("bad gate {text:?}; expected KIND:pK[=V][@ANGLE]"));
        let (kind, rest) = text.trim().split_once(':').ok_or_else(bad)?;
        let kind = kind.to_ascii_lowercase();
        if !["crx", "crz", "cx", "cz", "x"].contains(&kind.as_str()) {
            return Err(bad());
        }
        let (rest, angle) = match rest.split_once('@') {
            Some((r, a)) => (r, a.parse::<f64>().map_err(|_| bad())?),
            None => (rest, FRAC_PI_2),
        };
        let (pos, value) = match rest.split_once('=') {
            Some((p, "1")) => (p, true),
            Some((p, "0")) => (p, false),
            Some(_) => return Err(bad()),
            None => (rest, true),
        };
        let position = pos.strip_prefix('p').ok_or_else(bad)?.parse().map_err(|_| bad())?;
        Ok(GateSpec { label: text.trim().to_string(), kind, position, value, angle })
    }

    pub fn gate(&self, layout: FrqiLayout) -> anyhow::Result<Gate> {
        if self.position >= layout.num_positional() {
            return Err(usage(format!("{}: only p0..p{} exist", self.label, layout.num_positional() - 1)));
        }
        let (p, c) = (layout.positional_qubit(self.position), layout.color_qubit());
        let g = match self.kind.as_str() {
            "crx" => Gate::rx(c, self.angle).controlled(p, self.value),
            "crz" => Gate::rz(c, self.angle).controlled(p, self.value),
            "cx" => Gate::x(c).controlled(p, self.value),
            "cz" => Gate::z(c).controlled(p, self.value),
            _ => Gate::x(p),
        };
        Ok(g)
    }
}

/// Write panels side by side, `cols` per row, with a one-pixel gray gutter.
fn write_grid(path: &Path, panels: &[GrayImage], cols: usize) -> anyhow::Result<()> {
    let side = panels[0].side();
    let rows = panels.len().div_ceil(cols);
    let (w, h) = (cols * (side + 1) - 1, rows * (side + 1) - 1);
    let mut buf = vec![128u8; w * h];
    for (k, p) in panels.iter().enumerate() {
        let (ox, oy) = ((k % cols) * (side + 1), (k / cols) * (side + 1));
        for (i, b) in p.to_bytes().into_iter().enumerate() {
            buf[(oy + i / side) * w + ox + i % side] = b;
        }
    }
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    write!(f, "P5\n{w} {h}\n255\n")?;
    f.write_all(&buf)?;
    f.flush()?;
    Ok(())
}

pub fn explore(ctx: &Ctx, s: &Explore) -> anyhow::Result<()> {
    if s.gates.is_empty() || s.gates.len() > 4 {
        return Err(usage("--gates takes one to four gate specs"));
    }
    let specs: Vec<GateSpec> = s.gates.iter().map(|g| GateSpec::parse(g)).collect::<anyhow::Result<_>>()?;
    let (img, layout) = load_image(&s.image)?;
    let gates: Vec<Gate> = specs.iter().map(|g| g.gate(layout)).collect::<anyhow::Result<_>>()?;
    let clean = frqi::prepare_state(&frqi::image_to_angles(&img)?)?;

    let dir = ctx.out.join("explore");
    std::fs::create_dir_all(&dir)?;
    let mut m = ctx.manifest(s)?;
    m.add_input("image", &s.image)?;
    let mut index = String::from("panel,gates,file\n");
    let mut panels = Vec::new();
    for mask in 0..1usize << gates.len() {
        let mut state: StateVector = clean.clone();
        let mut names = Vec::new();
        for (k, g) in gates.iter().enumerate().filter(|(k, _)| mask >> k & 1 == 1) {
            state.apply_gate(g)?;
            names.push(specs[k].label.as_str());
        }
        let panel = if s.shots == 0 {
            frqi::decode_weights(&state.probabilities(), layout)?
        } else {
            frqi::measure_image(&state, s.shots, rng::derive(ctx.seed, "explore", mask as u64), layout)?
        };
        let file = format!("panel-{mask:02}.pgm");
        panel.save_pgm(dir.join(&file))?;
        m.add_output(&file, dir.join(&file))?;
        let names = if names.is_empty() { "none".to_string() } else { names.join("+") };
        log::info!("panel {mask}: {names}");
        index.push_str(&format!("{mask},{names},{file}\n"));
        panels.push(panel);
    }
    std::fs::write(dir.join("panels.csv"), index)?;
    let cols = (panels.len() as f64).sqrt().ceil() as usize;
    write_grid(&dir.join("grid.pgm"), &panels, cols)?;
    m.add_output("grid", dir.join("grid.pgm"))?;
    ctx.save_manifest(&m)
}

pub fn bench_depth(ctx: &Ctx, s: &BenchDepth) -> anyhow::Result<()> {
    let catalog = crate::load_catalog(&s.catalog)?;
    let points = harness::bench_depth(&catalog, s.max_gates, ctx.seed).map_err(|e| usage(e.to_string()))?;
    let path = ctx.out.join("depth.csv");
    let mut csv = String::from("gates,depth,num_qubits,seconds\n");
    for p in &points {
        log::info!("{} gates: depth {}, {:.2} ms", p.gates, p.depth, 1e3 * p.seconds);
        csv.push_str(&format!("{},{},{},{}\n", p.gates, p.depth, p.num_qubits, p.seconds));
    }
    std::fs::write(&path, csv)?;
    let mut m = ctx.manifest(s)?;
    m.catalog_hash = Some(catalog.content_hash());
    m.add_output("depth", &path)?;
    ctx.save_manifest(&m)
}
