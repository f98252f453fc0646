//! Problem instances and their plain-text configuration format.
//!
//! A config file is a sequence of `key = value` lines. Lines before the first
//! section header describe the problem (`name`, `kind`, `domain`); `[params]`
//! holds named reals and `[left]`, `[right]`, `[bottom]`, `[top]` hold one
//! boundary condition each. `#` starts a comment.
//!
//! ```text
//! name = nozzle-shock
//! kind = nozzle-shock
//! domain = 0, 10
//!
//! [params]
//! gamma = 1.4
//!
//! [left]
//! kind = state
//! rho = 0.502
//! u = 1.299
//! p = 0.3809
//!
//! [right]
//! kind = partial
//! component = rho
//! value = 0.7519
//! ```
//!
//! Boundary kinds are `none`, `state` (one line per component, each a
//! profile), `partial` (`component`, `value`), `stagnation` (`p0`, `t0`),
//! `reflection`, and `wedge` (`start`, `angle_deg`). A profile is a number
//! or one of `linear(c0, c1)`, `quadratic(c0, c1, c2)`,
//! `sine(offset, amplitude, k)` (meaning `offset + amplitude sin(k pi s)`),
//! `step(at, below, above)`, where `s` is the coordinate along the side.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use sha2::{Digest, Sha256};

use super::{
    make_euler2d, make_nozzle_euler, AreaProfile, Euler2d, NozzleEuler, Primitive2d, State,
    DEFAULT_GAMMA, DEFAULT_GAS_CONSTANT,
};
use crate::error::{Result, SolverError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Side {
    Left,
    Right,
    Bottom,
    Top,
}

impl Side {
    pub const ALL: [Side; 4] = [Side::Left, Side::Right, Side::Bottom, Side::Top];

    pub fn name(self) -> &'static str {
        match self {
            Side::Left => "left",
            Side::Right => "right",
            Side::Bottom => "bottom",
            Side::Top => "top",
        }
    }

    fn parse(s: &str) -> Option<Side> {
        Side::ALL.into_iter().find(|side| side.name() == s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Domain {
    Interval { lo: f64, hi: f64 },
    Rectangle { x0: f64, x1: f64, y0: f64, y1: f64 },
}

/// A boundary datum as a function of the coordinate along its side.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Profile {
    Constant(f64),
    Linear { c0: f64, c1: f64 },
    Quadratic { c0: f64, c1: f64, c2: f64 },
    Sine { offset: f64, amplitude: f64, wavenumber: f64 },
    Step { at: f64, below: f64, above: f64 },
}

impl Profile {
    pub fn eval(&self, s: f64) -> f64 {
        match *self {
            Profile::Constant(c) => c,
            Profile::Linear { c0, c1 } => c0 + c1 * s,
            Profile::Quadratic { c0, c1, c2 } => c0 + s * (c1 + c2 * s),
            Profile::Sine {
                offset,
                amplitude,
                wavenumber,
            } => offset + amplitude * (wavenumber * std::f64::consts::PI * s).sin(),
            Profile::Step { at, below, above } => {
                if s < at {
                    below
                } else {
                    above
                }
            }
        }
    }

    pub fn is_constant(&self) -> bool {
        matches!(self, Profile::Constant(_))
    }

    fn render(&self) -> String {
        match *self {
            Profile::Constant(c) => format!("{c:?}"),
            Profile::Linear { c0, c1 } => format!("linear({c0:?}, {c1:?})"),
            Profile::Quadratic { c0, c1, c2 } => format!("quadratic({c0:?}, {c1:?}, {c2:?})"),
            Profile::Sine {
                offset,
                amplitude,
                wavenumber,
            } => format!("sine({offset:?}, {amplitude:?}, {wavenumber:?})"),
            Profile::Step { at, below, above } => format!("step({at:?}, {below:?}, {above:?})"),
        }
    }

    fn parse(text: &str) -> Result<Profile> {
        let text = text.trim();
        if let Ok(c) = text.parse::<f64>() {
            return Ok(Profile::Constant(c));
        }
        let open = text
            .find('(')
            .ok_or_else(|| SolverError::Config(format!("bad profile `{text}`")))?;
        if !text.ends_with(')') {
            return Err(SolverError::Config(format!("bad profile `{text}`")));
        }
        let head = text[..open].trim();
        let args = parse_reals(&text[open + 1..text.len() - 1])?;
        let want = |n: usize| {
            if args.len() == n {
                Ok(())
            } else {
                Err(SolverError::Config(format!("`{head}` takes {n} arguments")))
            }
        };
        match head {
            "linear" => want(2).map(|_| Profile::Linear { c0: args[0], c1: args[1] }),
            "quadratic" => want(3).map(|_| Profile::Quadratic {
                c0: args[0],
                c1: args[1],
                c2: args[2],
            }),
            "sine" => want(3).map(|_| Profile::Sine {
                offset: args[0],
                amplitude: args[1],
                wavenumber: args[2],
            }),
            "step" => want(3).map(|_| Profile::Step {
                at: args[0],
                below: args[1],
                above: args[2],
            }),
            _ => Err(SolverError::Config(format!("unknown profile `{head}`"))),
        }
    }
}

/// Reservoir conditions `(p0, T0)` feeding a subsonic inlet. The family
/// parameter is the inlet Mach number; static inlet values follow from the
/// isentropic relations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StagnationInflow {
    pub p0: f64,
    pub t0: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum BoundaryCondition {
    None,
    /// Full state given component by component (`rho`, `u`, `v`, `p`, or `u` for scalars).
    State(Vec<(String, Profile)>),
    /// One scalar condition on the named primitive component.
    Partial { component: String, value: f64 },
    Stagnation(StagnationInflow),
    /// Impermeable flat wall, `v = 0`.
    Reflection,
    /// Flat wall up to `start`, then inclined by `angle_deg`.
    Wedge { start: f64, angle_deg: f64 },
}

impl BoundaryCondition {
    pub fn kind_name(&self) -> &'static str {
        match self {
            BoundaryCondition::None => "none",
            BoundaryCondition::State(_) => "state",
            BoundaryCondition::Partial { .. } => "partial",
            BoundaryCondition::Stagnation(_) => "stagnation",
            BoundaryCondition::Reflection => "reflection",
            BoundaryCondition::Wedge { .. } => "wedge",
        }
    }

    /// Component profile of a `State` condition.
    pub fn component(&self, name: &str) -> Option<Profile> {
        match self {
            BoundaryCondition::State(c) => c.iter().find(|(n, _)| n == name).map(|(_, p)| *p),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ProblemKind {
    NozzleShock,
    NozzleSonic,
    InteriorShock,
    Rarefaction,
    Reflection,
    Oblique,
    ObliqueNonconstant,
}

impl ProblemKind {
    pub const ALL: [ProblemKind; 7] = [
        ProblemKind::NozzleShock,
        ProblemKind::NozzleSonic,
        ProblemKind::InteriorShock,
        ProblemKind::Rarefaction,
        ProblemKind::Reflection,
        ProblemKind::Oblique,
        ProblemKind::ObliqueNonconstant,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ProblemKind::NozzleShock => "nozzle-shock",
            ProblemKind::NozzleSonic => "nozzle-sonic",
            ProblemKind::InteriorShock => "interior-shock",
            ProblemKind::Rarefaction => "rarefaction",
            ProblemKind::Reflection => "reflection",
            ProblemKind::Oblique => "oblique",
            ProblemKind::ObliqueNonconstant => "oblique-nonconstant",
        }
    }

    pub fn parse(s: &str) -> Option<ProblemKind> {
        ProblemKind::ALL.into_iter().find(|k| k.name() == s)
    }

    pub fn is_1d(self) -> bool {
        matches!(self, ProblemKind::NozzleShock | ProblemKind::NozzleSonic)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProblemInstance {
    pub name: String,
    pub kind: ProblemKind,
    pub domain: Domain,
    pub boundaries: BTreeMap<Side, BoundaryCondition>,
    pub params: BTreeMap<String, f64>,
}

impl ProblemInstance {
    fn new(kind: ProblemKind, domain: Domain) -> Self {
        let mut params = BTreeMap::new();
        params.insert("gamma".to_string(), DEFAULT_GAMMA);
        let mut boundaries = BTreeMap::new();
        let sides: &[Side] = match domain {
            Domain::Interval { .. } => &[Side::Left, Side::Right],
            Domain::Rectangle { .. } => &Side::ALL,
        };
        for &s in sides {
            boundaries.insert(s, BoundaryCondition::None);
        }
        Self {
            name: kind.name().to_string(),
            kind,
            domain,
            boundaries,
            params,
        }
    }

    fn with_param(mut self, k: &str, v: f64) -> Self {
        self.params.insert(k.to_string(), v);
        self
    }

    fn with_bc(mut self, side: Side, bc: BoundaryCondition) -> Self {
        self.boundaries.insert(side, bc);
        self
    }

    pub fn param(&self, key: &str) -> Result<f64> {
        self.params
            .get(key)
            .copied()
            .ok_or_else(|| SolverError::Config(format!("{}: missing parameter `{key}`", self.name)))
    }

    pub fn param_or(&self, key: &str, default: f64) -> f64 {
        self.params.get(key).copied().unwrap_or(default)
    }

    pub fn gamma(&self) -> f64 {
        self.param_or("gamma", DEFAULT_GAMMA)
    }

    pub fn gas_constant(&self) -> f64 {
        self.param_or("gas_constant", DEFAULT_GAS_CONSTANT)
    }

    pub fn boundary(&self, side: Side) -> &BoundaryCondition {
        self.boundaries.get(&side).unwrap_or(&BoundaryCondition::None)
    }

    pub fn interval(&self) -> Result<(f64, f64)> {
        match self.domain {
            Domain::Interval { lo, hi } => Ok((lo, hi)),
            _ => Err(SolverError::Config(format!("{} is not one-dimensional", self.name))),
        }
    }

    pub fn rectangle(&self) -> Result<(f64, f64, f64, f64)> {
        match self.domain {
            Domain::Rectangle { x0, x1, y0, y1 } => Ok((x0, x1, y0, y1)),
            _ => Err(SolverError::Config(format!("{} is not two-dimensional", self.name))),
        }
    }

    pub fn area_profile(&self) -> Result<AreaProfile> {
        match self.params.get("area_kind").copied() {
            Some(k) if k == 0.0 => Ok(AreaProfile::Tanh {
                base: self.param("area_base")?,
                amplitude: self.param("area_amplitude")?,
                slope: self.param("area_slope")?,
                shift: self.param("area_shift")?,
            }),
            Some(k) if k == 1.0 => Ok(AreaProfile::Parabolic {
                throat_area: self.param("area_throat")?,
                curvature: self.param("area_curvature")?,
                throat: self.param("area_throat_x")?,
            }),
            _ => Err(SolverError::Config(format!(
                "{}: `area_kind` must be 0 (tanh) or 1 (parabolic)",
                self.name
            ))),
        }
    }

    pub fn nozzle_system(&self) -> Result<NozzleEuler> {
        Ok(make_nozzle_euler(self.area_profile()?, self.gamma(), self.gas_constant()))
    }

    pub fn euler_system(&self) -> Euler2d {
        make_euler2d(self.gamma())
    }

    /// Evaluates the named component of a `State` boundary at coordinate `s`.
    pub fn component_at(&self, side: Side, name: &str, s: f64) -> Result<f64> {
        self.boundary(side)
            .component(name)
            .map(|p| p.eval(s))
            .ok_or_else(|| {
                SolverError::Config(format!("{}: {} boundary has no `{name}`", self.name, side.name()))
            })
    }

    /// Conserved Euler state from `rho, u, v, p` boundary data.
    pub fn euler_state_at(&self, side: Side, s: f64) -> Result<State<4>> {
        let prim = Primitive2d::new(
            self.component_at(side, "rho", s)?,
            self.component_at(side, "u", s)?,
            self.component_at(side, "v", s)?,
            self.component_at(side, "p", s)?,
        );
        let sys = self.euler_system();
        let u = sys.conserved(&prim);
        sys.primitive(&u)?;
        Ok(u)
    }

    /// Stable identifier of the problem data, used to key oracle caches.
    pub fn hash_hex(&self) -> String {
        let digest = Sha256::digest(self.to_config_string().as_bytes());
        hex::encode(&digest[..8])
    }

    pub fn to_config_string(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "name = {}", self.name);
        let _ = writeln!(out, "kind = {}", self.kind.name());
        match self.domain {
            Domain::Interval { lo, hi } => {
                let _ = writeln!(out, "domain = {lo:?}, {hi:?}");
            }
            Domain::Rectangle { x0, x1, y0, y1 } => {
                let _ = writeln!(out, "domain = {x0:?}, {x1:?}, {y0:?}, {y1:?}");
            }
        }
        out.push_str("\n[params]\n");
        for (k, v) in &self.params {
            let _ = writeln!(out, "{k} = {v:?}");
        }
        for (side, bc) in &self.boundaries {
            let _ = writeln!(out, "\n[{}]", side.name());
            let _ = writeln!(out, "kind = {}", bc.kind_name());
            match bc {
                BoundaryCondition::None | BoundaryCondition::Reflection => {}
                BoundaryCondition::State(comps) => {
                    for (name, prof) in comps {
                        let _ = writeln!(out, "{name} = {}", prof.render());
                    }
                }
                BoundaryCondition::Partial { component, value } => {
                    let _ = writeln!(out, "component = {component}");
                    let _ = writeln!(out, "value = {value:?}");
                }
                BoundaryCondition::Stagnation(s) => {
                    let _ = writeln!(out, "p0 = {:?}", s.p0);
                    let _ = writeln!(out, "t0 = {:?}", s.t0);
                }
                BoundaryCondition::Wedge { start, angle_deg } => {
                    let _ = writeln!(out, "start = {start:?}");
                    let _ = writeln!(out, "angle_deg = {angle_deg:?}");
                }
            }
        }
        out
    }

    pub fn parse_config(text: &str) -> Result<ProblemInstance> {
        let mut header: BTreeMap<String, String> = BTreeMap::new();
        let mut params = BTreeMap::new();
        let mut sections: BTreeMap<Side, Vec<(String, String)>> = BTreeMap::new();
        enum Section {
            Header,
            Params,
            Side(Side),
        }
        let mut current = Section::Header;
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if line.starts_with('[') && line.ends_with(']') {
                let name = line[1..line.len() - 1].trim();
                current = if name == "params" {
                    Section::Params
                } else {
                    let side = Side::parse(name).ok_or_else(|| {
                        SolverError::Config(format!("line {}: unknown section `{name}`", lineno + 1))
                    })?;
                    if sections.insert(side, Vec::new()).is_some() {
                        return Err(SolverError::Config(format!(
                            "line {}: duplicate section `{name}`",
                            lineno + 1
                        )));
                    }
                    Section::Side(side)
                };
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| {
                SolverError::Config(format!("line {}: expected `key = value`", lineno + 1))
            })?;
            let (k, v) = (k.trim().to_string(), v.trim().to_string());
            match current {
                Section::Header => {
                    header.insert(k, v);
                }
                Section::Params => {
                    let x = v.parse::<f64>().map_err(|_| {
                        SolverError::Config(format!("line {}: `{v}` is not a number", lineno + 1))
                    })?;
                    params.insert(k, x);
                }
                Section::Side(s) => sections.get_mut(&s).expect("section opened").push((k, v)),
            }
        }
        let kind_name = header
            .get("kind")
            .ok_or_else(|| SolverError::Config("missing `kind`".into()))?;
        let kind = ProblemKind::parse(kind_name)
            .ok_or_else(|| SolverError::Config(format!("unknown problem kind `{kind_name}`")))?;
        let dom = parse_reals(
            header
                .get("domain")
                .ok_or_else(|| SolverError::Config("missing `domain`".into()))?,
        )?;
        let domain = match dom.as_slice() {
            [lo, hi] if lo < hi => Domain::Interval { lo: *lo, hi: *hi },
            [x0, x1, y0, y1] if x0 < x1 && y0 < y1 => Domain::Rectangle {
                x0: *x0,
                x1: *x1,
                y0: *y0,
                y1: *y1,
            },
            _ => return Err(SolverError::Config("`domain` needs 2 or 4 increasing reals".into())),
        };
        let mut problem = ProblemInstance::new(kind, domain);
        if let Some(name) = header.get("name") {
            problem.name = name.clone();
        }
        problem.params = params;
        for (side, entries) in sections {
            if !problem.boundaries.contains_key(&side) {
                return Err(SolverError::Config(format!(
                    "side `{}` does not exist for this domain",
                    side.name()
                )));
            }
            problem.boundaries.insert(side, parse_boundary(&entries)?);
        }
        Ok(problem)
    }
}

fn parse_reals(s: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map_err(|_| SolverError::Config(format!("`{}` is not a number", t.trim())))
        })
        .collect()
}

fn parse_boundary(entries: &[(String, String)]) -> Result<BoundaryCondition> {
    let get = |key: &str| -> Result<&str> {
        entries
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
            .ok_or_else(|| SolverError::Config(format!("boundary missing `{key}`")))
    };
    let real = |key: &str| -> Result<f64> {
        let v = get(key)?;
        v.parse::<f64>()
            .map_err(|_| SolverError::Config(format!("`{key}` = `{v}` is not a number")))
    };
    let kind = get("kind")?;
    Ok(match kind {
        "none" => BoundaryCondition::None,
        "reflection" => BoundaryCondition::Reflection,
        "state" => {
            let comps = entries
                .iter()
                .filter(|(k, _)| k != "kind")
                .map(|(k, v)| Profile::parse(v).map(|p| (k.clone(), p)))
                .collect::<Result<Vec<_>>>()?;
            if comps.is_empty() {
                return Err(SolverError::Config("state boundary without components".into()));
            }
            BoundaryCondition::State(comps)
        }
        "partial" => BoundaryCondition::Partial {
            component: get("component")?.to_string(),
            value: real("value")?,
        },
        "stagnation" => BoundaryCondition::Stagnation(StagnationInflow {
            p0: real("p0")?,
            t0: real("t0")?,
        }),
        "wedge" => BoundaryCondition::Wedge {
            start: real("start")?,
            angle_deg: real("angle_deg")?,
        },
        other => return Err(SolverError::Config(format!("unknown boundary kind `{other}`"))),
    })
}

fn state(components: &[(&str, Profile)]) -> BoundaryCondition {
    BoundaryCondition::State(components.iter().map(|(n, p)| (n.to_string(), *p)).collect())
}

fn constant_state(rho: f64, u: f64, v: f64, p: f64) -> BoundaryCondition {
    use Profile::Constant as C;
    state(&[("rho", C(rho)), ("u", C(u)), ("v", C(v)), ("p", C(p))])
}

/// The seven problems the solver pipelines are built around.
pub fn registry() -> Vec<ProblemInstance> {
    use Profile::Constant as C;
    let g = DEFAULT_GAMMA;
    let nozzle_shock = ProblemInstance::new(ProblemKind::NozzleShock, Domain::Interval { lo: 0.0, hi: 10.0 })
        .with_param("gas_constant", DEFAULT_GAS_CONSTANT)
        .with_param("area_kind", 0.0)
        .with_param("area_base", 1.398)
        .with_param("area_amplitude", 0.347)
        .with_param("area_slope", 0.8)
        .with_param("area_shift", 4.0)
        .with_param("shock_lo", 1.0)
        .with_param("shock_hi", 9.0)
        .with_bc(
            Side::Left,
            state(&[("rho", C(0.502)), ("u", C(1.299)), ("p", C(0.3809))]),
        )
        .with_bc(
            Side::Right,
            BoundaryCondition::Partial {
                component: "rho".into(),
                value: 0.7519,
            },
        );
    let nozzle_sonic = ProblemInstance::new(ProblemKind::NozzleSonic, Domain::Interval { lo: 0.0, hi: 3.0 })
        .with_param("gas_constant", DEFAULT_GAS_CONSTANT)
        .with_param("area_kind", 1.0)
        .with_param("area_throat", 1.0)
        .with_param("area_curvature", 2.2)
        .with_param("area_throat_x", 1.5)
        .with_param("alpha_lo", 0.05)
        .with_param("alpha_hi", 0.2)
        .with_param("shock_lo", 1.6)
        .with_param("shock_hi", 2.95)
        .with_bc(Side::Left, BoundaryCondition::Stagnation(StagnationInflow { p0: 1.0, t0: 300.0 }))
        .with_bc(
            Side::Right,
            BoundaryCondition::Partial {
                component: "p".into(),
                value: 0.6784,
            },
        );
    let square = Domain::Rectangle {
        x0: 0.0,
        x1: 1.0,
        y0: 0.0,
        y1: 1.0,
    };
    let interior = ProblemInstance::new(ProblemKind::InteriorShock, square)
        .with_bc(Side::Left, state(&[("u", C(1.5))]))
        .with_bc(Side::Right, state(&[("u", C(-0.5))]))
        .with_bc(Side::Bottom, state(&[("u", Profile::Linear { c0: 1.5, c1: -2.0 })]));
    let rarefaction = ProblemInstance::new(
        ProblemKind::Rarefaction,
        Domain::Rectangle {
            x0: -1.0,
            x1: 1.0,
            y0: 0.0,
            y1: 1.0,
        },
    )
    .with_bc(
        Side::Bottom,
        state(&[(
            "u",
            Profile::Step {
                at: 0.0,
                below: -1.0,
                above: 0.5,
            },
        )]),
    );
    let reflection = ProblemInstance::new(
        ProblemKind::Reflection,
        Domain::Rectangle {
            x0: 0.0,
            x1: 4.0,
            y0: 0.0,
            y1: 1.0,
        },
    )
    .with_bc(Side::Top, constant_state(1.69997, 2.61934, -0.50632, 1.528191))
    .with_bc(Side::Left, constant_state(1.0, 2.9, 0.0, 1.0 / g))
    .with_bc(Side::Bottom, BoundaryCondition::Reflection);
    let wedge_domain = Domain::Rectangle {
        x0: 0.0,
        x1: 1.0,
        y0: 0.0,
        y1: 0.5,
    };
    let wedge = BoundaryCondition::Wedge {
        start: 0.5,
        angle_deg: 15.0,
    };
    let oblique = ProblemInstance::new(ProblemKind::Oblique, wedge_domain)
        .with_bc(Side::Left, constant_state(1.0, 3.0, 0.0, 1.0 / g))
        .with_bc(Side::Bottom, wedge.clone());
    let oblique_nc = ProblemInstance::new(ProblemKind::ObliqueNonconstant, wedge_domain)
        .with_bc(
            Side::Left,
            state(&[
                ("rho", C(1.0)),
                ("u", C(3.0)),
                (
                    "v",
                    Profile::Quadratic {
                        c0: 0.0,
                        c1: 5.0,
                        c2: -10.0,
                    },
                ),
                (
                    "p",
                    Profile::Sine {
                        offset: 1.0 / g,
                        amplitude: -0.3,
                        wavenumber: 4.0,
                    },
                ),
            ]),
        )
        .with_bc(Side::Bottom, wedge);
    vec![
        nozzle_shock,
        nozzle_sonic,
        interior,
        rarefaction,
        reflection,
        oblique,
        oblique_nc,
    ]
}

impl ProblemInstance {
    /// Looks a problem up in [`registry`] by name.
    pub fn named(name: &str) -> Option<ProblemInstance> {
        registry().into_iter().find(|p| p.name == name)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn registry_has_all_kinds_once() {
        let reg = registry();
        assert_eq!(reg.len(), 7);
        for k in ProblemKind::ALL {
            assert_eq!(reg.iter().filter(|p| p.kind == k).count(), 1);
        }
    }

    #[test]
    fn transcribed_boundary_data() {
        let p = ProblemInstance::named("nozzle-shock").unwrap();
        assert_eq!(p.component_at(Side::Left, "rho", 0.0).unwrap(), 0.502);
        assert_eq!(p.component_at(Side::Left, "u", 0.0).unwrap(), 1.299);
        assert_eq!(p.component_at(Side::Left, "p", 0.0).unwrap(), 0.3809);

        let r = ProblemInstance::named("reflection").unwrap();
        let top: Vec<f64> = ["rho", "u", "v", "p"]
            .iter()
            .map(|c| r.component_at(Side::Top, c, 2.0).unwrap())
            .collect();
        assert_eq!(top, vec![1.69997, 2.61934, -0.50632, 1.528191]);
        assert_eq!(*r.boundary(Side::Bottom), BoundaryCondition::Reflection);

        let o = ProblemInstance::named("oblique").unwrap();
        assert_eq!(
            *o.boundary(Side::Bottom),
            BoundaryCondition::Wedge {
                start: 0.5,
                angle_deg: 15.0
            }
        );
        let nc = ProblemInstance::named("oblique-nonconstant").unwrap();
        let y: f64 = 0.1;
        assert!((nc.component_at(Side::Left, "v", y).unwrap() - 10.0 * y * (0.5 - y)).abs() < 1e-15);
        let p = nc.component_at(Side::Left, "p", y).unwrap();
        assert!((p - (1.0 / 1.4 - 0.3 * (4.0 * std::f64::consts::PI * y).sin())).abs() < 1e-15);

        let rf = ProblemInstance::named("rarefaction").unwrap();
        assert_eq!(rf.component_at(Side::Bottom, "u", -0.3).unwrap(), -1.0);
        assert_eq!(rf.component_at(Side::Bottom, "u", 0.3).unwrap(), 0.5);
    }

    #[test]
    fn every_side_declared_once() {
        for p in registry() {
            let expected = if p.kind.is_1d() { 2 } else { 4 };
            assert_eq!(p.boundaries.len(), expected, "{}", p.name);
        }
    }

    #[test]
    fn config_round_trip() {
        for p in registry() {
            let text = p.to_config_string();
            let back = ProblemInstance::parse_config(&text).unwrap();
            assert_eq!(back, p, "{text}");
            assert_eq!(back.hash_hex(), p.hash_hex());
        }
    }

    #[test]
    fn config_errors() {
        assert!(ProblemInstance::parse_config("kind = nope\ndomain = 0, 1").is_err());
        assert!(ProblemInstance::parse_config("kind = oblique\ndomain = 0, 1\n[left]\nkind = state\nu = linear(1)")
            .is_err());
        assert!(ProblemInstance::parse_config("kind = oblique\ndomain = 1, 0").is_err());
        assert!(ProblemInstance::parse_config("kind = nozzle-shock\ndomain = 0, 1\n[top]\nkind = none").is_err());
    }
}
