use super::matrix_market::{read_matrix_market, MatrixMarketError};
use crate::core::ParametricProblem;
use crate::scalar::{ComplexScalar, RealOf};
use ndarray::Array2;
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SplitFormError {
    #[error("cannot read manifest {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("{path}:{line}: expected `<scalar-expr> ; <matrix-path>`")]
    MissingSeparator { path: String, line: usize },
    #[error("{path}:{line}: bad scalar expression `{expr}`: {reason}")]
    BadExpression {
        path: String,
        line: usize,
        expr: String,
        reason: String,
    },
    #[error("{path}:{line}: bad range directive (expected `range <min> <max>`)")]
    BadRange { path: String, line: usize },
    #[error(transparent)]
    Matrix(#[from] MatrixMarketError),
    #[error("matrix {path} is {rows}x{cols}, expected square of size {expected}")]
    SizeMismatch {
        path: String,
        expected: usize,
        rows: usize,
        cols: usize,
    },
    #[error("manifest {path} lists no terms")]
    Empty { path: String },
}

/// One factor of a scalar coefficient: the grammar covers products of
/// `lambda^a * p^b`, `exp(c*lambda)`, `sqrt(lambda - c)` (principal
/// branch), and complex constants.
#[derive(Debug, Clone, PartialEq)]
pub enum Factor<C> {
    LambdaPow(u32),
    ParamPow(u32),
    Exp(C),
    SqrtShift(C),
    Const(C),
}

/// Product of factors; the scalar function g_k(lambda, p) of one term.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarExpr<C> {
    factors: Vec<Factor<C>>,
    source: String,
}

impl<C: ComplexScalar> ScalarExpr<C> {
    pub fn eval(&self, lambda: C, p: RealOf<C>) -> C {
        let mut acc = C::one();
        for factor in &self.factors {
            acc *= match factor {
                Factor::LambdaPow(a) => lambda.powi(*a as i32),
                Factor::ParamPow(b) => C::from_real(num_traits::Float::powi(p, *b as i32)),
                Factor::Exp(c) => (*c * lambda).exp(),
                Factor::SqrtShift(c) => (lambda - *c).sqrt(),
                Factor::Const(c) => *c,
            };
        }
        acc
    }

    pub fn source(&self) -> &str {
        &self.source
    }
}

/// Split lambda-p-separable problem `L(lambda, p) = sum_k g_k(lambda, p) A_k`.
#[derive(Debug, Clone)]
pub struct SplitFormProblem<C: ComplexScalar> {
    terms: Vec<(ScalarExpr<C>, Array2<C>)>,
    dim: usize,
    range: (RealOf<C>, RealOf<C>),
}

impl<C: ComplexScalar> SplitFormProblem<C> {
    pub fn new(
        terms: Vec<(ScalarExpr<C>, Array2<C>)>,
        range: (RealOf<C>, RealOf<C>),
    ) -> Option<Self> {
        let dim = terms.first()?.1.nrows();
        if terms.iter().any(|(_, a)| a.nrows() != dim || a.ncols() != dim) {
            return None;
        }
        Some(Self { terms, dim, range })
    }

    pub fn term_count(&self) -> usize {
        self.terms.len()
    }

    pub fn with_range(mut self, range: (RealOf<C>, RealOf<C>)) -> Self {
        self.range = range;
        self
    }
}

impl<C: ComplexScalar> ParametricProblem<C> for SplitFormProblem<C> {
    fn dim(&self, _p: RealOf<C>) -> usize {
        self.dim
    }

    fn eval(&self, lambda: C, p: RealOf<C>) -> Array2<C> {
        let mut out = Array2::zeros((self.dim, self.dim));
        for (expr, matrix) in &self.terms {
            out.scaled_add(expr.eval(lambda, p), matrix);
        }
        out
    }

    fn param_range(&self) -> (RealOf<C>, RealOf<C>) {
        self.range
    }
}

/// Split a string at top-level occurrences of `sep` (outside parentheses).
fn split_top_level(s: &str, sep: char) -> Vec<String> {
    let mut parts = vec![String::new()];
    let mut depth = 0usize;
    for ch in s.chars() {
        match ch {
            '(' => depth += 1,
            ')' => depth = depth.saturating_sub(1),
            c if c == sep && depth == 0 => {
                parts.push(String::new());
                continue;
            }
            _ => {}
        }
        parts.last_mut().unwrap().push(ch);
    }
    parts
}

/// Parse a complex constant: `2`, `-3.5e-2`, `i`, `2i`, `(3+4i)`, `(1-0.5i)`.
fn parse_complex<C: ComplexScalar>(token: &str) -> Result<C, String> {
    let t = token.trim();
    let inner = if t.starts_with('(') && t.ends_with(')') {
        t[1..t.len() - 1].trim()
    } else {
        t
    };
    if inner.is_empty() {
        return Err("empty constant".into());
    }

    // pure imaginary shorthand
    let imag_only = |s: &str| -> Option<f64> {
        let body = s.strip_suffix(['i', 'j'])?;
        match body {
            "" | "+" => Some(1.0),
            "-" => Some(-1.0),
            other => other.parse().ok(),
        }
    };
    if let Some(im) = imag_only(inner) {
        return Ok(C::complex(0.0, im));
    }
    if let Ok(re) = inner.parse::<f64>() {
        return Ok(C::complex(re, 0.0));
    }

    // a +- bi: find the sign splitting the two components (not leading,
    // not an exponent sign)
    let bytes = inner.as_bytes();
    for pos in (1..bytes.len()).rev() {
        let c = bytes[pos] as char;
        if (c == '+' || c == '-') && !matches!(bytes[pos - 1] as char, 'e' | 'E') {
            let (re_str, im_str) = inner.split_at(pos);
            let re: f64 = re_str
                .trim()
                .parse()
                .map_err(|_| format!("bad real part `{re_str}`"))?;
            let im = imag_only(im_str.trim()).ok_or_else(|| format!("bad imaginary part `{im_str}`"))?;
            return Ok(C::complex(re, im));
        }
    }
    Err(format!("cannot parse constant `{token}`"))
}

fn parse_power(token: &str, name: &str) -> Result<u32, String> {
    match token.strip_prefix(name) {
        Some("") => Ok(1),
        Some(rest) => rest
            .strip_prefix('^')
            .ok_or_else(|| format!("expected `{name}^<int>`"))?
            .parse::<u32>()
            .map_err(|e| format!("bad exponent: {e}")),
        None => Err(format!("not a {name} power")),
    }
}

/// Parse one scalar coefficient expression (a `*`-separated product).
pub fn parse_scalar_expr<C: ComplexScalar>(text: &str) -> Result<ScalarExpr<C>, String> {
    let mut factors = Vec::new();
    for raw in split_top_level(text, '*') {
        let token: String = raw.split_whitespace().collect();
        if token.is_empty() {
            return Err("empty factor (stray `*`?)".into());
        }
        let factor = if token.starts_with("lambda") {
            Factor::LambdaPow(parse_power(&token, "lambda")?)
        } else if token.starts_with('p') && (token == "p" || token.starts_with("p^")) {
            Factor::ParamPow(parse_power(&token, "p")?)
        } else if let Some(inner) = token.strip_prefix("exp(").and_then(|r| r.strip_suffix(')')) {
            // exp(c * lambda) with optional bare forms exp(lambda), exp(-lambda)
            let parts = split_top_level(inner, '*');
            let (coeff, rest): (C, &str) = match parts.len() {
                1 => match parts[0].as_str() {
                    "lambda" => (C::one(), "lambda"),
                    "-lambda" => (-C::one(), "lambda"),
                    _ => return Err(format!("expected `exp(c*lambda)`, got `exp({inner})`")),
                },
                2 => (parse_complex::<C>(&parts[0])?, parts[1].trim()),
                _ => return Err(format!("expected `exp(c*lambda)`, got `exp({inner})`")),
            };
            if rest != "lambda" {
                return Err(format!("exponent must be linear in lambda: `exp({inner})`"));
            }
            Factor::Exp(coeff)
        } else if let Some(inner) = token.strip_prefix("sqrt(").and_then(|r| r.strip_suffix(')')) {
            if inner == "lambda" {
                Factor::SqrtShift(C::zero())
            } else if let Some(shift) = inner.strip_prefix("lambda-") {
                Factor::SqrtShift(parse_complex::<C>(shift)?)
            } else if let Some(shift) = inner.strip_prefix("lambda+") {
                Factor::SqrtShift(-parse_complex::<C>(shift)?)
            } else {
                return Err(format!("expected `sqrt(lambda - c)`, got `sqrt({inner})`"));
            }
        } else {
            Factor::Const(parse_complex::<C>(&token)?)
        };
        factors.push(factor);
    }
    Ok(ScalarExpr {
        factors,
        source: text.trim().to_string(),
    })
}

/// Load a split-form problem from a manifest file.
///
/// Each non-comment line reads `<scalar-expr> ; <matrix-path>` with paths
/// relative to the manifest; an optional `range <min> <max>` line sets the
/// parameter interval (default [0, 1]). Matrices are Matrix Market files
/// and must share one square size.
pub fn load_split_form<C: ComplexScalar>(
    manifest: &Path,
) -> Result<SplitFormProblem<C>, SplitFormError> {
    let display = manifest.display().to_string();
    let content = std::fs::read_to_string(manifest).map_err(|source| SplitFormError::Io {
        path: display.clone(),
        source,
    })?;
    let base = manifest.parent().unwrap_or(Path::new("."));

    let mut range = (C::real(0.0), C::real(1.0));
    let mut terms: Vec<(ScalarExpr<C>, Array2<C>)> = Vec::new();
    let mut expected: Option<usize> = None;

    for (idx, raw) in content.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if let Some(rest) = line.strip_prefix("range ") {
            let vals: Vec<f64> = rest
                .split_whitespace()
                .map(|v| v.parse::<f64>())
                .collect::<Result<_, _>>()
                .map_err(|_| SplitFormError::BadRange {
                    path: display.clone(),
                    line: line_no,
                })?;
            if vals.len() != 2 || !(vals[0] < vals[1]) {
                return Err(SplitFormError::BadRange {
                    path: display.clone(),
                    line: line_no,
                });
            }
            range = (C::real(vals[0]), C::real(vals[1]));
            continue;
        }
        let Some((expr_text, path_text)) = line.split_once(';') else {
            return Err(SplitFormError::MissingSeparator {
                path: display.clone(),
                line: line_no,
            });
        };
        let expr = parse_scalar_expr::<C>(expr_text).map_err(|reason| {
            SplitFormError::BadExpression {
                path: display.clone(),
                line: line_no,
                expr: expr_text.trim().to_string(),
                reason,
            }
        })?;
        let matrix_path = base.join(path_text.trim());
        let matrix = read_matrix_market::<C>(&matrix_path)?;
        let n = matrix.nrows();
        if matrix.ncols() != n || expected.is_some_and(|e| e != n) {
            return Err(SplitFormError::SizeMismatch {
                path: matrix_path.display().to_string(),
                expected: expected.unwrap_or(n),
                rows: matrix.nrows(),
                cols: matrix.ncols(),
            });
        }
        expected = Some(n);
        terms.push((expr, matrix));
    }

    SplitFormProblem::new(terms, range).ok_or(SplitFormError::Empty { path: display })
}
