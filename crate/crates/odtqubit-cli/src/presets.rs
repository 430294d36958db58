//! Named parameter bundles. Each preset is an ordinary config text, so the
//! overlay rules (preset < config file < flags) need no special cases.

use crate::config::{Config, ConfigError};

/// The standard cesium red trap: 1064 nm, 2.1 um waist, 1.0 mK deep, with a
/// gate-error scan over 5/15/50 uK.
const FIG2: &str = "\
[species]
preset = cs133_1064nm
[trap]
kind = red_gaussian
wavelength_m = 1.064e-6
waist_m = 2.1e-6
depth_mK = 1.0
[ensemble]
temperature_uK = 15
tail_eps = 1e-6
[state]
n_x = 0
n_y = 0
n_z = 0
[gate_error]
rabi_min_rad_s = 6.283185307179586e3
rabi_max_rad_s = 6.283185307179586e6
points = 20
log = true
temperatures_uK = 5, 15, 50
";

/// Same trap at 15 uK, set up for the Ramsey fringe and dephasing figures.
const FIG3: &str = "\
[species]
preset = cs133_1064nm
[trap]
kind = red_gaussian
wavelength_m = 1.064e-6
waist_m = 2.1e-6
depth_mK = 1.0
[ensemble]
temperature_uK = 15
tail_eps = 1e-6
[ramsey]
base_detuning_rad_s = 6.283185307179586e3
t_max_s = 3.0e-2
points = 3001
[t2]
depth_sigma_uK = 10
";

/// Same trap with the atom prepared hot (n = 300, 300, 2000), set up for the
/// depth scan and the same-state magic depth.
const FIG4: &str = "\
[species]
preset = cs133_1064nm
[trap]
kind = red_gaussian
wavelength_m = 1.064e-6
waist_m = 2.1e-6
depth_mK = 1.0
[ensemble]
temperature_uK = 15
tail_eps = 1e-6
[state]
n_x = 300
n_y = 300
n_z = 2000
[dfs_scan]
depth_min_mK = 0.0025
depth_max_mK = 0.5
points = 200
log = false
average = state
intensity = true
[magic]
pairings = same_state
";

/// Cesium blue lattice: 5 um periods, barrier ratio 400, aligned bottom for
/// the noise figures plus ratio data for the magic depth.
const BLUE_LATTICE: &str = "\
[species]
preset = cs133_848nm
[trap]
kind = blue_lattice
period_x_m = 5e-6
period_y_m = 5e-6
period_z_m = 5e-6
barrier_x_uK = 65
barrier_y_uK = 65
barrier_z_uK = 65
bottom_uK = 0
barrier_ratio_x = 400
barrier_ratio_y = 400
barrier_ratio_z = 400
[ensemble]
temperature_uK = 15
tail_eps = 1e-6
[state]
n_x = 0
n_y = 0
n_z = 0
[magic]
pairings = blue_ground
[t2]
barrier_sigma_relative = 0.01
";

pub const PRESET_NAMES: [&str; 4] = ["fig2", "fig3", "fig4", "blue-lattice"];

pub fn lookup(name: &str) -> Result<Config, ConfigError> {
    let text = match name {
        "fig2" => FIG2,
        "fig3" => FIG3,
        "fig4" => FIG4,
        "blue-lattice" => BLUE_LATTICE,
        other => {
            return Err(ConfigError(format!(
                "unknown preset `{other}` (available: {})",
                PRESET_NAMES.join(", ")
            )))
        }
    };
    Config::parse(text, &format!("preset {name}"))
}
