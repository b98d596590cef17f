//! Named symbols and charts selectable as `builtin:<name>[:<param>]`.

use crate::config::{parse_f64, usage, CliResult};
use pdolab::coord_transform::Diffeomorphism;
use pdolab::csvio::read_symbol;
use pdolab::symbols::{bracket_symbol, differential_symbol, ClosedForm, SampledSymbol, SymbolClass, SymbolForm};
use pdolab::{Grid, GridFunction, C64};
use std::path::Path;

pub const SYMBOLS: &[&str] = &["identity", "derivative", "bracket:<m>", "modulated_bracket:<m>", "variable_derivative", "weighted_bracket", "order_zero", "cusp"];

fn split(arg: &str) -> Option<(&str, Option<&str>)> {
    let rest = arg.strip_prefix("builtin:")?;
    Some(match rest.split_once(':') {
        Some((n, p)) => (n, Some(p)),
        None => (rest, None),
    })
}

fn x_symbol(g: &Grid, class: SymbolClass, f: impl Fn(f64, f64) -> C64 + Send + Sync + 'static) -> CliResult<SampledSymbol> {
    Ok(SampledSymbol::sample(g, SymbolForm::X, class, ClosedForm::new(move |x, xi, _| f(x[0], xi[0])))?)
}

fn builtin_symbol(name: &str, param: Option<&str>, g: &Grid) -> CliResult<SampledSymbol> {
    let m = |default: f64| param.map_or(Ok(default), |p| parse_f64("symbol parameter", p));
    let unit = |axis: usize| -> Vec<usize> {
        let mut a = vec![0; g.dim()];
        a[axis] = 1;
        a
    };
    let one = GridFunction::from_real_fn(g, |_| 1.0);
    match name {
        "identity" => Ok(bracket_symbol(g, 0.0)?),
        "derivative" => Ok(differential_symbol(g, &[(unit(0), one)], f64::INFINITY)?),
        "bracket" => Ok(bracket_symbol(g, m(1.0)?)?),
        "modulated_bracket" => {
            let m = m(-1.0)?;
            x_symbol(g, SymbolClass::smooth(m), move |x, xi| C64::from_polar((1.0 + xi * xi).powf(m / 2.0), x))
        }
        "variable_derivative" => x_symbol(g, SymbolClass::smooth(1.0), |x, xi| C64::new(x.sin(), (1.0 + 0.3 * x.cos()) * xi)),
        "weighted_bracket" => x_symbol(g, SymbolClass::smooth(1.0), |x, xi| C64::new((2.0 + x.cos()) * (1.0 + xi * xi).sqrt(), 0.0)),
        "order_zero" => x_symbol(g, SymbolClass::smooth(0.0), |x, xi| C64::new((1.0 + 0.3 * x.cos()) * xi / (1.0 + xi * xi).sqrt(), 0.0)),
        "cusp" => x_symbol(g, SymbolClass::holder(0.0, 0.5), |x, _| C64::new((x / 2.0).sin().abs().sqrt(), 0.0)),
        _ => usage(format!("unknown builtin symbol '{name}'; known: {}", SYMBOLS.join(", "))),
    }
}

/// A symbol from `builtin:<name>[:<param>]` sampled on `grid`, or from a symbol CSV file.
pub fn load_symbol(arg: &str, grid: &Grid) -> CliResult<SampledSymbol> {
    match split(arg) {
        Some((name, param)) => builtin_symbol(name, param, grid),
        None => {
            let p = Path::new(arg);
            if !p.exists() {
                return usage(format!("symbol file {arg} does not exist"));
            }
            Ok(read_symbol(p)?)
        }
    }
}

/// A chart from `builtin:<name>[:<param>]` on the domain `(0, L)`.
pub fn load_diffeo(arg: &str, period: f64) -> CliResult<Diffeomorphism> {
    let Some((name, param)) = split(arg) else {
        return usage(format!("diffeomorphism {arg:?} must be builtin:<name>[:<param>]"));
    };
    let default = match name {
        "affine" => 1.0,
        "sine" => 0.1,
        "c1theta" => 0.5,
        _ => 0.0,
    };
    let a = param.map_or(Ok(default), |p| parse_f64("diffeomorphism parameter", p))?;
    match name {
        "identity" | "affine" | "sine" | "c1theta" => Ok(Diffeomorphism::builtin(name, a, (0.0, period))?),
        _ => usage(format!("unknown builtin diffeomorphism '{name}'; known: identity, affine:<a>, sine:<a>, c1theta:<theta>")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use pdolab::core_grid::make_torus_grid;

    #[test]
    fn registry() {
        let g = make_torus_grid(1, 16, 6.0).unwrap();
        assert_eq!(load_symbol("builtin:bracket:2", &g).unwrap().class.order, 2.0);
        assert_eq!(load_symbol("builtin:cusp", &g).unwrap().class.tau, 0.5);
        for s in ["identity", "derivative", "modulated_bracket", "variable_derivative", "weighted_bracket", "order_zero"] {
            assert!(load_symbol(&format!("builtin:{s}"), &g).is_ok(), "{s}");
        }
        assert!(load_symbol("builtin:nope", &g).is_err());
        assert!(load_symbol("/no/such/file.csv", &g).is_err());
        assert!(load_diffeo("builtin:sine:0.2", 6.0).is_ok());
        assert!(load_diffeo("sine", 6.0).is_err());
        assert!(load_diffeo("builtin:sine:1.5", 6.0).is_err());
    }
}
