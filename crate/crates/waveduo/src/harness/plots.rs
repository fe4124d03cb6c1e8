//! Gnuplot script emission: the five-panel set for one run directory —
//! energy history, the three decay indicators, and the final displacement
//! profiles. Scripts are plain text, reference the CSVs relatively, render
//! to SVG, and are byte-identical on re-emission.

use super::{read_manifest, HarnessError};
use std::path::{Path, PathBuf};

struct Panel {
    script: &'static str,
    svg: &'static str,
    title: &'static str,
    ylabel: &'static str,
    /// gnuplot plot clauses, referencing energy.csv / profile_final.csv.
    plot: &'static str,
}

const PANELS: [Panel; 5] = [
    Panel {
        script: "energy.gp",
        svg: "energy.svg",
        title: "discrete energy",
        ylabel: "E(t)",
        plot: "plot 'energy.csv' skip 1 using 1:2 with lines lw 2 title 'E'",
    },
    Panel {
        script: "d1.gp",
        svg: "d1.svg",
        title: "exponential-rate indicator",
        ylabel: "-ln E(t) / t",
        plot: "plot 'energy.csv' skip 1 using 1:7 with lines lw 2 title '-ln(E)/t'",
    },
    Panel {
        script: "d2.gp",
        svg: "d2.svg",
        title: "1/t-rate indicator",
        ylabel: "t E(t)",
        plot: "plot 'energy.csv' skip 1 using 1:8 with lines lw 2 title 't*E'",
    },
    Panel {
        script: "d3.gp",
        svg: "d3.svg",
        title: "polynomial-exponent indicator",
        ylabel: "-ln E(t) / ln t",
        plot: "plot 'energy.csv' skip 1 using 1:9 with lines lw 2 title '-ln(E)/ln(t)'",
    },
    Panel {
        script: "profiles.gp",
        svg: "profiles.svg",
        title: "final displacement profiles",
        ylabel: "u, y",
        plot: "plot 'profile_final.csv' skip 1 using 1:2 with lines lw 2 title 'u', \\\n     'profile_final.csv' skip 1 using 1:3 with lines lw 2 title 'y'",
    },
];

/// Writes the five plot scripts into `dir`, which must already contain the
/// run's CSVs and manifest. Returns the script paths.
pub fn emit_plots(dir: &Path) -> Result<Vec<PathBuf>, HarnessError> {
    let manifest = read_manifest(&dir.join("manifest.toml"))?;
    for input in ["energy.csv", "profile_final.csv"] {
        let p = dir.join(input);
        if !p.exists() {
            return Err(HarnessError::Io {
                path: p,
                source: std::io::Error::new(std::io::ErrorKind::NotFound, "missing plot input"),
            });
        }
    }
    let name = &manifest.spec.name;
    let mut written = Vec::with_capacity(PANELS.len());
    for panel in &PANELS {
        let is_profile = panel.script == "profiles.gp";
        let xlabel = if is_profile { "x" } else { "t" };
        let text = format!(
            "# gnuplot script; render with: gnuplot {script}\n\
             set terminal svg size 800,560 dynamic\n\
             set output '{svg}'\n\
             set datafile separator ','\n\
             set title '{name}: {title}'\n\
             set xlabel '{xlabel}'\n\
             set ylabel '{ylabel}'\n\
             set grid\n\
             set key top right\n\
             {plot}\n",
            script = panel.script,
            svg = panel.svg,
            name = name,
            title = panel.title,
            xlabel = xlabel,
            ylabel = panel.ylabel,
            plot = panel.plot,
        );
        let path = dir.join(panel.script);
        std::fs::write(&path, text)
            .map_err(|e| HarnessError::Io { path: path.clone(), source: e })?;
        written.push(path);
    }
    Ok(written)
}
