//! Atom species: mass, hyperfine splitting, and the differential-shift
//! parameter η = |ω_hfs/Δ| for a given trap wavelength.
//!
//! η is always a stored input. The helper [`eta_from_detuning`] exists for
//! users who want a single-line estimate, but nothing in the crate calls it
//! implicitly. Presets ship in a plain-text data file (see
//! `data/species.presets` for the grammar) so new species can be added
//! without rebuilding.

use std::sync::OnceLock;

use crate::error::{Error, Result};

/// Optional reference optical line, used only to convert trap depth to the
/// peak laser intensity that produces it.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ReferenceLine {
    /// Vacuum wavelength of the line, m.
    pub wavelength: f64,
    /// Natural linewidth, rad/s.
    pub linewidth: f64,
}

/// A neutral atom with two hyperfine fiducial states in a specific trap.
#[derive(Clone, Debug, PartialEq)]
pub struct AtomSpecies {
    pub name: String,
    /// Atomic mass, kg.
    pub mass: f64,
    /// Hyperfine qubit splitting ω_hfs, rad/s.
    pub hyperfine_splitting: f64,
    /// η = |ω_hfs/Δ| for the trap wavelength this species entry describes.
    pub eta: f64,
    /// Trap wavelength η refers to, if recorded.
    pub trap_wavelength: Option<f64>,
    /// Reference line for depth↔intensity conversion, if recorded.
    pub line: Option<ReferenceLine>,
}

impl AtomSpecies {
    pub fn new(name: impl Into<String>, mass: f64, hyperfine_splitting: f64, eta: f64) -> Result<Self> {
        if !(mass > 0.0) {
            return Err(Error::validation(format!("species mass must be > 0 kg, got {mass}")));
        }
        if !(hyperfine_splitting > 0.0) {
            return Err(Error::validation(format!(
                "hyperfine splitting must be > 0 rad/s, got {hyperfine_splitting}"
            )));
        }
        if !(eta > 0.0 && eta < 1.0) {
            return Err(Error::validation(format!("eta must lie in (0, 1), got {eta}")));
        }
        Ok(AtomSpecies {
            name: name.into(),
            mass,
            hyperfine_splitting,
            eta,
            trap_wavelength: None,
            line: None,
        })
    }

    pub fn with_trap_wavelength(mut self, wavelength: f64) -> Self {
        self.trap_wavelength = Some(wavelength);
        self
    }

    pub fn with_line(mut self, line: ReferenceLine) -> Self {
        self.line = Some(line);
        self
    }
}

/// Single-line estimate η = ω_hfs/|Δ| for a user-chosen reference transition.
/// Provided as an explicit helper only; presets store η directly.
pub fn eta_from_detuning(hyperfine_splitting: f64, detuning: f64) -> Result<f64> {
    if detuning == 0.0 {
        return Err(Error::domain("eta is undefined at zero detuning".to_string()));
    }
    if !(hyperfine_splitting > 0.0) {
        return Err(Error::domain(format!(
            "hyperfine splitting must be > 0 rad/s, got {hyperfine_splitting}"
        )));
    }
    Ok((hyperfine_splitting / detuning).abs())
}

/// A named species entry from a preset file.
#[derive(Clone, Debug, PartialEq)]
pub struct SpeciesEntry {
    pub id: String,
    pub species: AtomSpecies,
}

const PRESET_FORMAT_VERSION: u32 = 1;

/// Parse a species preset file (grammar documented in `data/species.presets`).
/// Entries keep file order; identifiers must be unique.
pub fn parse_species_file(text: &str) -> Result<Vec<SpeciesEntry>> {
    struct Block {
        id: String,
        line: usize,
        name: Option<String>,
        mass: Option<f64>,
        hfs: Option<f64>,
        eta: Option<f64>,
        trap_wavelength: Option<f64>,
        line_wavelength: Option<f64>,
        line_linewidth: Option<f64>,
    }

    fn finish(block: Block) -> Result<SpeciesEntry> {
        let missing = |key: &str| Error::SpeciesParse {
            line: block.line,
            msg: format!("block [{}] is missing required key `{}`", block.id, key),
        };
        let mass = block.mass.ok_or_else(|| missing("mass_kg"))?;
        let hfs = block.hfs.ok_or_else(|| missing("hyperfine_splitting_rad_s"))?;
        let eta = block.eta.ok_or_else(|| missing("eta"))?;
        let name = block.name.unwrap_or_else(|| block.id.clone());
        let mut species = AtomSpecies::new(name, mass, hfs, eta).map_err(|e| Error::SpeciesParse {
            line: block.line,
            msg: format!("block [{}]: {e}", block.id),
        })?;
        species.trap_wavelength = block.trap_wavelength;
        species.line = match (block.line_wavelength, block.line_linewidth) {
            (Some(wavelength), Some(linewidth)) => Some(ReferenceLine { wavelength, linewidth }),
            (None, None) => None,
            _ => {
                return Err(Error::SpeciesParse {
                    line: block.line,
                    msg: format!(
                        "block [{}]: line_wavelength_m and line_linewidth_rad_s must be given together",
                        block.id
                    ),
                })
            }
        };
        Ok(SpeciesEntry { id: block.id, species })
    }

    let mut entries: Vec<SpeciesEntry> = Vec::new();
    let mut current: Option<Block> = None;
    let mut version_seen = false;

    for (idx, raw) in text.lines().enumerate() {
        let lineno = idx + 1;
        let line = match raw.find('#') {
            Some(pos) => &raw[..pos],
            None => raw,
        }
        .trim();
        if line.is_empty() {
            continue;
        }

        if let Some(rest) = line.strip_prefix('[') {
            let id = rest.strip_suffix(']').ok_or(Error::SpeciesParse {
                line: lineno,
                msg: "unterminated block header, expected `[identifier]`".to_string(),
            })?;
            if id.is_empty() || !id.chars().all(|c| c.is_ascii_alphanumeric() || "_@.-".contains(c)) {
                return Err(Error::SpeciesParse {
                    line: lineno,
                    msg: format!("invalid block identifier `{id}`"),
                });
            }
            if !version_seen {
                return Err(Error::SpeciesParse {
                    line: lineno,
                    msg: "`format = 1` must precede the first block".to_string(),
                });
            }
            if let Some(block) = current.take() {
                entries.push(finish(block)?);
            }
            if entries.iter().any(|e| e.id == id) {
                return Err(Error::SpeciesParse {
                    line: lineno,
                    msg: format!("duplicate block identifier `{id}`"),
                });
            }
            current = Some(Block {
                id: id.to_string(),
                line: lineno,
                name: None,
                mass: None,
                hfs: None,
                eta: None,
                trap_wavelength: None,
                line_wavelength: None,
                line_linewidth: None,
            });
            continue;
        }

        let (key, value) = line.split_once('=').ok_or(Error::SpeciesParse {
            line: lineno,
            msg: "expected `key = value`".to_string(),
        })?;
        let key = key.trim();
        let value = value.trim();

        if current.is_none() {
            if key == "format" {
                let v: u32 = value.parse().map_err(|_| Error::SpeciesParse {
                    line: lineno,
                    msg: format!("unparseable format version `{value}`"),
                })?;
                if v != PRESET_FORMAT_VERSION {
                    return Err(Error::SpeciesParse {
                        line: lineno,
                        msg: format!("unsupported format version {v}, this build reads version {PRESET_FORMAT_VERSION}"),
                    });
                }
                version_seen = true;
                continue;
            }
            return Err(Error::SpeciesParse {
                line: lineno,
                msg: format!("key `{key}` outside any block (only `format` is allowed before blocks)"),
            });
        }

        let block = current.as_mut().unwrap();
        let parse_f64 = |value: &str| -> Result<f64> {
            value.parse::<f64>().map_err(|_| Error::SpeciesParse {
                line: lineno,
                msg: format!("field `{key}`: unparseable number `{value}`"),
            })
        };
        let set = |slot: &mut Option<f64>, value: f64| -> Result<()> {
            if slot.is_some() {
                return Err(Error::SpeciesParse {
                    line: lineno,
                    msg: format!("duplicate key `{key}`"),
                });
            }
            *slot = Some(value);
            Ok(())
        };
        match key {
            "name" => {
                if block.name.is_some() {
                    return Err(Error::SpeciesParse {
                        line: lineno,
                        msg: "duplicate key `name`".to_string(),
                    });
                }
                block.name = Some(value.to_string());
            }
            "mass_kg" => set(&mut block.mass, parse_f64(value)?)?,
            "hyperfine_splitting_rad_s" => set(&mut block.hfs, parse_f64(value)?)?,
            "eta" => set(&mut block.eta, parse_f64(value)?)?,
            "trap_wavelength_m" => set(&mut block.trap_wavelength, parse_f64(value)?)?,
            "line_wavelength_m" => set(&mut block.line_wavelength, parse_f64(value)?)?,
            "line_linewidth_rad_s" => set(&mut block.line_linewidth, parse_f64(value)?)?,
            other => {
                return Err(Error::SpeciesParse {
                    line: lineno,
                    msg: format!("unknown key `{other}`"),
                })
            }
        }
    }

    if let Some(block) = current.take() {
        entries.push(finish(block)?);
    }
    if !version_seen {
        return Err(Error::SpeciesParse {
            line: text.lines().count().max(1),
            msg: "missing `format = 1` header".to_string(),
        });
    }
    Ok(entries)
}

const BUILTIN_PRESETS: &str = include_str!("../data/species.presets");

/// The species presets shipped with the crate.
pub fn builtin_species() -> &'static [SpeciesEntry] {
    static CACHE: OnceLock<Vec<SpeciesEntry>> = OnceLock::new();
    CACHE.get_or_init(|| parse_species_file(BUILTIN_PRESETS).expect("builtin species presets parse"))
}

/// Look up a shipped preset by identifier.
pub fn builtin(id: &str) -> Option<&'static AtomSpecies> {
    builtin_species().iter().find(|e| e.id == id).map(|e| &e.species)
}

/// Cesium-133 in the 1064 nm red trap used throughout the docs and tests.
pub fn cesium_1064() -> &'static AtomSpecies {
    builtin("cs133_1064nm").expect("cs133_1064nm preset present")
}
