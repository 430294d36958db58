//! Subcommand implementations: resolve physics inputs from the layered
//! config, fan scans out over the worker pool, and emit deterministic
//! tables. Rows are assembled in grid order regardless of thread count and
//! written in one piece, so identical configs give identical bytes.

use std::path::Path;

use rayon::prelude::*;

use odtqubit::coherence::{
    dephasing_time_t2_star, envelope_exact, noise_response, parse_sequence, ramsey_short_time,
    ramsey_thermal_exact, revival_time, simulate_sequence, t2_star_prefactor, CoherenceTime,
    NoiseModel, NoiseResponse, RamseyConfig,
};
use odtqubit::gate::thermal_gate_fidelity;
use odtqubit::magic::{
    magic_depth_axial_sideband, magic_depth_blue, magic_depth_radial_sideband, magic_depth_same_state,
    MagicPairing, MagicQuery, MagicResult,
};
use odtqubit::report::{fmt_sci, json_string, Cell, Table, DFS_SCAN_COLUMNS, DFS_SCAN_INTENSITY_COLUMN, GATE_SCAN_COLUMNS, MAGIC_COLUMNS, RAMSEY_COLUMNS};
use odtqubit::species::{builtin_species, parse_species_file, SpeciesEntry};
use odtqubit::spectrum::{differential_trap_frequency, dfs_vs_depth_scan, ScanTarget};
use odtqubit::units::{joules_from_mk, joules_from_uk, mk_from_joules};
use odtqubit::{AtomSpecies, Axes, TrapGeometry, VibrationalState};

use crate::config::{Config, ConfigError};

/// CLI failure: configuration problems exit with code 2, runtime problems
/// with code 1.
#[derive(Debug)]
pub enum CliError {
    Config(String),
    Runtime(String),
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(msg) | CliError::Runtime(msg) => write!(f, "{msg}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Config(e.0)
    }
}

impl From<odtqubit::Error> for CliError {
    fn from(e: odtqubit::Error) -> Self {
        match e {
            odtqubit::Error::Integration(_) => CliError::Runtime(e.to_string()),
            _ => CliError::Config(e.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

/// Rendered output plus stderr notes (warnings, revival flags).
pub struct Output {
    pub text: String,
    pub notes: Vec<String>,
}

impl Output {
    fn table(table: Table, format: Format, notes: Vec<String>) -> Output {
        let text = match format {
            Format::Csv => table.to_csv_string(),
            Format::Json => table.to_json_string(),
        };
        Output { text, notes }
    }
}

/// Built-in species presets merged with an optional user file (user entries
/// override built-ins with the same identifier).
pub fn build_registry(user_file: Option<&Path>) -> Result<Vec<SpeciesEntry>, CliError> {
    let mut registry: Vec<SpeciesEntry> = builtin_species().to_vec();
    if let Some(path) = user_file {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("species file {}: {e}", path.display())))?;
        for entry in parse_species_file(&text)? {
            if let Some(slot) = registry.iter_mut().find(|e| e.id == entry.id) {
                *slot = entry;
            } else {
                registry.push(entry);
            }
        }
    }
    Ok(registry)
}

fn resolve_species(config: &Config, registry: &[SpeciesEntry]) -> Result<AtomSpecies, CliError> {
    if let Some(id) = config.get_str("species", "preset") {
        return registry
            .iter()
            .find(|e| e.id == id)
            .map(|e| e.species.clone())
            .ok_or_else(|| {
                let known: Vec<&str> = registry.iter().map(|e| e.id.as_str()).collect();
                CliError::Config(format!("unknown species preset `{id}` (available: {})", known.join(", ")))
            });
    }
    let name = config.require_str("species", "name")?.to_string();
    let mut species = AtomSpecies::new(
        name,
        config.require_f64("species", "mass_kg")?,
        config.require_f64("species", "hyperfine_splitting_rad_s")?,
        config.require_f64("species", "eta")?,
    )?;
    species.trap_wavelength = config.get_f64("species", "trap_wavelength_m")?;
    if let (Some(wl), Some(lw)) = (
        config.get_f64("species", "line_wavelength_m")?,
        config.get_f64("species", "line_linewidth_rad_s")?,
    ) {
        species.line = Some(odtqubit::species::ReferenceLine { wavelength: wl, linewidth: lw });
    }
    Ok(species)
}

fn energy_field(config: &Config, section: &str, base: &str) -> Result<Option<f64>, CliError> {
    let from_j = config.get_f64(section, &format!("{base}_J"))?;
    let from_mk = config.get_f64(section, &format!("{base}_mK"))?;
    let from_uk = config.get_f64(section, &format!("{base}_uK"))?;
    let mut given = [
        from_j,
        from_mk.map(joules_from_mk),
        from_uk.map(joules_from_uk),
    ]
    .into_iter()
    .flatten();
    let value = given.next();
    if given.next().is_some() {
        return Err(CliError::Config(format!(
            "field [{section}] {base}: give exactly one of {base}_J, {base}_mK, {base}_uK"
        )));
    }
    Ok(value)
}

fn build_trap(config: &Config) -> Result<TrapGeometry, CliError> {
    match config.require_str("trap", "kind")? {
        "red_gaussian" => {
            let depth = energy_field(config, "trap", "depth")?
                .ok_or_else(|| CliError::Config("missing required field [trap] depth_mK (or depth_J)".to_string()))?;
            Ok(TrapGeometry::red_gaussian(
                config.require_f64("trap", "wavelength_m")?,
                config.require_f64("trap", "waist_m")?,
                depth,
            )?)
        }
        "blue_lattice" => {
            let periods = Axes::new(
                config.require_f64("trap", "period_x_m")?,
                config.require_f64("trap", "period_y_m")?,
                config.require_f64("trap", "period_z_m")?,
            );
            let bottom = energy_field(config, "trap", "bottom")?.unwrap_or(0.0);
            let barrier = |axis: &str| -> Result<Option<f64>, CliError> {
                energy_field(config, "trap", &format!("barrier_{axis}"))
            };
            match (barrier("x")?, barrier("y")?, barrier("z")?) {
                (Some(x), Some(y), Some(z)) => Ok(TrapGeometry::blue_lattice(periods, Axes::new(x, y, z), bottom)?),
                (None, None, None) => {
                    let ratios = Axes::new(
                        config.require_f64("trap", "barrier_ratio_x")?,
                        config.require_f64("trap", "barrier_ratio_y")?,
                        config.require_f64("trap", "barrier_ratio_z")?,
                    );
                    Ok(TrapGeometry::blue_lattice_from_ratios(periods, ratios, bottom)?)
                }
                _ => Err(CliError::Config(
                    "fields [trap] barrier_x/y/z: give all three barrier heights or none (ratios)".to_string(),
                )),
            }
        }
        other => Err(CliError::Config(format!(
            "field [trap] kind: unknown trap kind `{other}` (expected red_gaussian or blue_lattice)"
        ))),
    }
}

fn temperature_k(config: &Config, section: &str) -> Result<Option<f64>, CliError> {
    Ok(config.get_f64(section, "temperature_uK")?.map(|t| t * 1e-6))
}

fn require_temperature(config: &Config) -> Result<f64, CliError> {
    temperature_k(config, "ensemble")?
        .ok_or_else(|| CliError::Config("missing required field [ensemble] temperature_uK".to_string()))
}

fn tail_eps(config: &Config) -> Result<f64, CliError> {
    Ok(config.get_f64("ensemble", "tail_eps")?.unwrap_or(1e-6))
}

fn vibrational_state(config: &Config) -> Result<VibrationalState, CliError> {
    Ok(VibrationalState::new(
        config.get_u32("state", "n_x")?.unwrap_or(0),
        config.get_u32("state", "n_y")?.unwrap_or(0),
        config.get_u32("state", "n_z")?.unwrap_or(0),
    ))
}

fn build_grid(section: &str, min: f64, max: f64, points: usize, log: bool) -> Result<Vec<f64>, CliError> {
    if points < 2 {
        return Err(CliError::Config(format!("field [{section}] points: need at least 2, got {points}")));
    }
    if !(min < max) {
        return Err(CliError::Config(format!("fields [{section}]: need min < max, got {min} .. {max}")));
    }
    if log && !(min > 0.0) {
        return Err(CliError::Config(format!("fields [{section}]: log spacing needs min > 0, got {min}")));
    }
    let n = (points - 1) as f64;
    Ok((0..points)
        .map(|i| {
            let f = i as f64 / n;
            if log {
                min * (max / min).powf(f)
            } else {
                min + (max - min) * f
            }
        })
        .collect())
}

pub fn cmd_dfs_scan(config: &Config, registry: &[SpeciesEntry], format: Format) -> Result<Output, CliError> {
    let species = resolve_species(config, registry)?;
    let trap = build_trap(config)?;
    let grid = build_grid(
        "dfs_scan",
        joules_from_mk(config.require_f64("dfs_scan", "depth_min_mK")?),
        joules_from_mk(config.require_f64("dfs_scan", "depth_max_mK")?),
        config.get_usize("dfs_scan", "points")?.unwrap_or(200),
        config.get_bool("dfs_scan", "log")?.unwrap_or(false),
    )?;
    let emit_intensity = config.get_bool("dfs_scan", "intensity")?.unwrap_or(false);
    let target = match config.get_str("dfs_scan", "average").unwrap_or("state") {
        "state" => ScanTarget::State(vibrational_state(config)?),
        "ensemble" => ScanTarget::Ensemble { temperature: require_temperature(config)?, tail_eps: tail_eps(config)? },
        other => {
            return Err(CliError::Config(format!(
                "field [dfs_scan] average: expected `state` or `ensemble`, got `{other}`"
            )))
        }
    };

    let rows = grid
        .par_iter()
        .map(|&depth| {
            dfs_vs_depth_scan(&species, &trap, &target, &[depth], emit_intensity).map(|mut v| v.remove(0))
        })
        .collect::<Result<Vec<_>, _>>()?;

    let mut columns: Vec<&str> = DFS_SCAN_COLUMNS.to_vec();
    if emit_intensity {
        columns.push(DFS_SCAN_INTENSITY_COLUMN);
    }
    let mut table = Table::new(&columns);
    for row in rows {
        let mut cells = vec![
            Cell::Float(row.depth),
            Cell::Float(row.depth_mk),
            Cell::Float(row.quantized),
            Cell::Float(row.classical),
        ];
        if emit_intensity {
            cells.push(row.intensity.map(Cell::Float).unwrap_or(Cell::Empty));
        }
        table.push_row(cells);
    }
    Ok(Output::table(table, format, trap.geometry_warnings()))
}

pub fn cmd_gate_error(config: &Config, registry: &[SpeciesEntry], format: Format) -> Result<Output, CliError> {
    let species = resolve_species(config, registry)?;
    let trap = build_trap(config)?;
    let eps = tail_eps(config)?;
    let temps_uk = config
        .get_f64_list("gate_error", "temperatures_uK")?
        .ok_or_else(|| CliError::Config("missing required field [gate_error] temperatures_uK".to_string()))?;
    let rabi_grid = build_grid(
        "gate_error",
        config.require_f64("gate_error", "rabi_min_rad_s")?,
        config.require_f64("gate_error", "rabi_max_rad_s")?,
        config.get_usize("gate_error", "points")?.unwrap_or(20),
        config.get_bool("gate_error", "log")?.unwrap_or(true),
    )?;

    // row-major: temperature outer, Rabi frequency inner
    let jobs: Vec<(f64, f64)> = temps_uk
        .iter()
        .flat_map(|&t| rabi_grid.iter().map(move |&r| (t * 1e-6, r)))
        .collect();
    let rows = jobs
        .par_iter()
        .map(|&(temperature, rabi)| {
            thermal_gate_fidelity(&species, &trap, temperature, rabi, eps).map(|f| (rabi, temperature, f))
        })
        .collect::<Result<Vec<_>, _>>()?;

    let mut table = Table::new(&GATE_SCAN_COLUMNS);
    for (rabi, temperature, f) in rows {
        table.push_row(vec![
            Cell::Float(rabi),
            Cell::Float(temperature),
            Cell::Float(f.fidelity),
            Cell::Float(f.infidelity),
        ]);
    }
    Ok(Output::table(table, format, trap.geometry_warnings()))
}

pub fn cmd_ramsey(
    config: &Config,
    registry: &[SpeciesEntry],
    format: Format,
    sequence_file: Option<&Path>,
) -> Result<Output, CliError> {
    let species = resolve_species(config, registry)?;
    let trap = build_trap(config)?;
    let temperature = require_temperature(config)?;
    let base_detuning = config.get_f64("ramsey", "base_detuning_rad_s")?.unwrap_or(6.283185307179586e3);
    let ramsey = RamseyConfig::for_trap(&species, &trap, temperature, base_detuning, tail_eps(config)?)?;
    let mut notes = trap.geometry_warnings();

    if let Some(path) = sequence_file {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("sequence file {}: {e}", path.display())))?;
        let sequence = parse_sequence(&text)?;
        let mean_w = simulate_sequence(&sequence, &ramsey)?;
        let mut table = Table::new(&["mean_w", "ramsey_readout"]);
        table.push_row(vec![Cell::Float(mean_w), Cell::Float(-mean_w)]);
        return Ok(Output::table(table, format, notes));
    }

    let t_max = config.require_f64("ramsey", "t_max_s")?;
    let points = config.get_usize("ramsey", "points")?.unwrap_or(2001);
    if points < 2 || !(t_max > 0.0) {
        return Err(CliError::Config("fields [ramsey]: need t_max_s > 0 and points >= 2".to_string()));
    }
    let grid: Vec<f64> = (0..points).map(|i| t_max * i as f64 / (points - 1) as f64).collect();

    let rows: Vec<[f64; 5]> = grid
        .par_iter()
        .map(|&t| {
            let short = ramsey_short_time(&ramsey, t);
            [
                t,
                ramsey_thermal_exact(&ramsey, t),
                short.per_axis,
                short.isotropic,
                envelope_exact(&ramsey, t),
            ]
        })
        .collect();

    let deltas = differential_trap_frequency(&species, &trap)?;
    if let Some(revival) = revival_time(deltas, 1e-9)? {
        let mut note = format!(
            "revival: deltas are commensurate, full fringe recovery at t = {} s (gcf {} rad/s, harmonics {}:{}:{})",
            fmt_sci(revival.time),
            fmt_sci(revival.gcf),
            revival.harmonics[0],
            revival.harmonics[1],
            revival.harmonics[2]
        );
        // heating is not simulated; a user-supplied scrambling time marks
        // revivals the vibrational-state lifetime would erase
        if let Some(scrambling) = config.get_f64("ramsey", "scrambling_time_s")? {
            if revival.time > scrambling {
                note.push_str(&format!(
                    "; exceeds the vibrational-state scrambling time {} s, so heating erases it before it can be observed",
                    fmt_sci(scrambling)
                ));
            }
        }
        notes.push(note);
    }

    let mut table = Table::new(&RAMSEY_COLUMNS);
    for row in rows {
        table.push_row(row.iter().map(|&x| Cell::Float(x)).collect());
    }
    Ok(Output::table(table, format, notes))
}

pub fn cmd_t2(config: &Config, registry: &[SpeciesEntry]) -> Result<Output, CliError> {
    let species = resolve_species(config, registry)?;
    let temperature = match temperature_k(config, "t2")? {
        Some(t) => t,
        None => require_temperature(config)?,
    };

    let coherence_field = |time: CoherenceTime| match time {
        CoherenceTime::Finite(t) => fmt_sci(t),
        CoherenceTime::Infinite => "\"infinite\"".to_string(),
    };

    let mut fields: Vec<(String, String)> = vec![
        ("t2_star_prefactor".into(), fmt_sci(t2_star_prefactor())),
        ("temperature_K".into(), fmt_sci(temperature)),
        (
            "t2_star_s".into(),
            coherence_field(dephasing_time_t2_star(species.eta, temperature)?),
        ),
    ];

    let trap = build_trap(config)?;
    let depth_sigma = match (energy_field(config, "t2", "depth_sigma")?, config.get_f64("t2", "depth_sigma_relative")?) {
        (Some(_), Some(_)) => {
            return Err(CliError::Config(
                "fields [t2]: give depth_sigma_uK or depth_sigma_relative, not both".to_string(),
            ))
        }
        (Some(j), None) => Some(j),
        (None, Some(rel)) => Some(rel * trap.depth()),
        (None, None) => None,
    };
    if let Some(sigma) = depth_sigma {
        let model = NoiseModel::depth(sigma)?;
        match noise_response(&species, &trap, vibrational_state(config)?, &model)? {
            NoiseResponse::Homogeneous { sigma_dfs, t2_prime } => {
                fields.push(("sigma_dfs_rad_s".into(), fmt_sci(sigma_dfs)));
                fields.push(("t2_prime_s".into(), coherence_field(t2_prime)));
            }
            NoiseResponse::BarrierSuppressed(_) => unreachable!("depth noise is homogeneous"),
        }
    }

    if let Some(rel) = config.get_f64("t2", "barrier_sigma_relative")? {
        let TrapGeometry::BlueLattice { barriers, .. } = trap else {
            return Err(CliError::Config(
                "field [t2] barrier_sigma_relative applies to a blue lattice trap".to_string(),
            ));
        };
        let model = NoiseModel::barriers(barriers.scale(rel))?;
        match noise_response(&species, &trap, vibrational_state(config)?, &model)? {
            NoiseResponse::BarrierSuppressed(fluct) => {
                fields.push(("blue_dfs_fluctuation_rad_s".into(), fmt_sci(fluct.value)));
                fields.push(("blue_suppression_ratio".into(), fmt_sci(fluct.suppression_ratio)));
            }
            NoiseResponse::Homogeneous { .. } => unreachable!("barrier noise is lattice noise"),
        }
    }

    let body: Vec<String> = fields
        .iter()
        .map(|(k, v)| format!("  {}: {}", json_string(k), v))
        .collect();
    Ok(Output {
        text: format!("{{\n{}\n}}\n", body.join(",\n")),
        notes: Vec::new(),
    })
}

fn magic_row(
    table: &mut Table,
    pairing: &str,
    species: &AtomSpecies,
    trap: &TrapGeometry,
    state: Option<VibrationalState>,
    result: &MagicResult,
) {
    let mut cells: Vec<Cell> = vec![Cell::Text(pairing.to_string()), Cell::Text(species.name.clone())];
    match *trap {
        TrapGeometry::RedGaussian { wavelength, waist, .. } => {
            cells.push(Cell::Text("red_gaussian".into()));
            cells.push(Cell::Float(wavelength));
            cells.push(Cell::Float(waist));
            cells.extend([Cell::Empty, Cell::Empty, Cell::Empty, Cell::Empty, Cell::Empty, Cell::Empty]);
        }
        TrapGeometry::BlueLattice { periods, .. } => {
            let ratios = trap.barrier_ratios().expect("magic lattice template has ratios");
            cells.push(Cell::Text("blue_lattice".into()));
            cells.extend([Cell::Empty, Cell::Empty]);
            cells.extend(periods.to_array().map(Cell::Float));
            cells.extend(ratios.to_array().map(Cell::Float));
        }
    }
    match state {
        Some(n) => cells.extend([Cell::Int(n.n_x as u64), Cell::Int(n.n_y as u64), Cell::Int(n.n_z as u64)]),
        None => cells.extend([Cell::Empty, Cell::Empty, Cell::Empty]),
    }
    cells.push(Cell::Float(result.depth));
    cells.push(Cell::Float(mk_from_joules(result.depth)));
    cells.push(Cell::Float(result.dfs_at_magic));
    cells.push(Cell::Float(result.stationarity_residual));
    table.push_row(cells);
}

pub fn cmd_magic(config: &Config, registry: &[SpeciesEntry], format: Format) -> Result<Output, CliError> {
    let species = resolve_species(config, registry)?;
    let pairings = config
        .get_str_list("magic", "pairings")
        .ok_or_else(|| CliError::Config("missing required field [magic] pairings".to_string()))?;
    if pairings.is_empty() {
        return Err(CliError::Config("field [magic] pairings: list is empty".to_string()));
    }

    let mut table = Table::new(&MAGIC_COLUMNS);
    for pairing in &pairings {
        match pairing.as_str() {
            "same_state" | "radial_sideband" | "axial_sideband" => {
                let trap = build_trap(config)?;
                if !matches!(trap, TrapGeometry::RedGaussian { .. }) {
                    return Err(CliError::Config(format!(
                        "pairing `{pairing}` needs [trap] kind = red_gaussian"
                    )));
                }
                match pairing.as_str() {
                    "same_state" => {
                        let state = vibrational_state(config)?;
                        let query =
                            MagicQuery::new(species.clone(), trap.clone(), MagicPairing::SameState(state))?;
                        let result = magic_depth_same_state(&query)?;
                        magic_row(&mut table, pairing, &species, &trap, Some(state), &result);
                    }
                    "radial_sideband" => {
                        let query = MagicQuery::new(species.clone(), trap.clone(), MagicPairing::RadialSideband)?;
                        let result = magic_depth_radial_sideband(&query)?;
                        magic_row(&mut table, pairing, &species, &trap, None, &result);
                    }
                    _ => {
                        let query = MagicQuery::new(species.clone(), trap.clone(), MagicPairing::AxialSideband)?;
                        let result = magic_depth_axial_sideband(&query)?;
                        magic_row(&mut table, pairing, &species, &trap, None, &result);
                    }
                }
            }
            "blue_ground" => {
                let periods = Axes::new(
                    config.require_f64("trap", "period_x_m")?,
                    config.require_f64("trap", "period_y_m")?,
                    config.require_f64("trap", "period_z_m")?,
                );
                let ratios = Axes::new(
                    config.require_f64("trap", "barrier_ratio_x")?,
                    config.require_f64("trap", "barrier_ratio_y")?,
                    config.require_f64("trap", "barrier_ratio_z")?,
                );
                // template bottom only carries the ratios; any positive value works
                let template = TrapGeometry::blue_lattice_from_ratios(periods, ratios, joules_from_uk(1.0))?;
                let query = MagicQuery::new(species.clone(), template.clone(), MagicPairing::BlueGround)?;
                let blue = magic_depth_blue(&query)?;
                magic_row(
                    &mut table,
                    pairing,
                    &species,
                    &template,
                    Some(VibrationalState::GROUND),
                    &blue.result,
                );
            }
            other => {
                return Err(CliError::Config(format!(
                    "field [magic] pairings: unknown pairing `{other}` (expected same_state, radial_sideband, axial_sideband, blue_ground)"
                )))
            }
        }
    }
    Ok(Output::table(table, format, Vec::new()))
}

pub fn cmd_species(registry: &[SpeciesEntry], format: Format) -> Result<Output, CliError> {
    let mut table = Table::new(&["id", "name", "mass_kg", "hyperfine_splitting_rad_s", "eta", "trap_wavelength_m"]);
    for entry in registry {
        let s = &entry.species;
        table.push_row(vec![
            Cell::Text(entry.id.clone()),
            Cell::Text(s.name.clone()),
            Cell::Float(s.mass),
            Cell::Float(s.hyperfine_splitting),
            Cell::Float(s.eta),
            s.trap_wavelength.map(Cell::Float).unwrap_or(Cell::Empty),
        ]);
    }
    Ok(Output::table(table, format, Vec::new()))
}
