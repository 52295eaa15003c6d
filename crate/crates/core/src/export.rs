//! CSV and JSON writers. Every float is printed with 17 significant digits so
//! a value read back is the same double; every document starts with the
//! resolved run configuration.

use std::io;

use num_complex::Complex64;
use serde::Serialize;
use serde_json::ser::{Formatter, PrettyFormatter};

use crate::error::{Error, Result};
use crate::field::FieldGrid;
use crate::geometry::{MaterialSample, PolarPoint};
use crate::limit_study::SweepReport;
use crate::mode_solver::ModeSolution;

pub fn format_float(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        x.to_string()
    }
}

/// Pretty JSON whose numbers use [`format_float`].
struct RoundTrip(PrettyFormatter<'static>);

macro_rules! delegate {
    ($($name:ident),*) => {$(
        fn $name<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
            self.0.$name(w)
        }
    )*};
}

impl Formatter for RoundTrip {
    fn write_f64<W: ?Sized + io::Write>(&mut self, w: &mut W, value: f64) -> io::Result<()> {
        w.write_all(format_float(value).as_bytes())
    }

    fn write_f32<W: ?Sized + io::Write>(&mut self, w: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(w, value as f64)
    }

    delegate!(begin_array, end_array, begin_object, end_object, end_array_value, end_object_value);

    fn begin_array_value<W: ?Sized + io::Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_array_value(w, first)
    }

    fn begin_object_key<W: ?Sized + io::Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_object_key(w, first)
    }

    fn begin_object_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object_value(w)
    }
}

fn io_error(e: impl std::fmt::Display) -> Error {
    Error::InvalidParameter(format!("serialization failed: {e}"))
}

pub fn to_json<T: Serialize + ?Sized>(value: &T) -> Result<String> {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, RoundTrip(PrettyFormatter::new()));
    value.serialize(&mut ser).map_err(io_error)?;
    buf.push(b'\n');
    String::from_utf8(buf).map_err(io_error)
}

/// JSON cannot carry comments, so the config travels as the first field.
pub fn json_document<C: Serialize, T: Serialize>(config: &C, body: &T) -> Result<String> {
    #[derive(Serialize)]
    struct Document<'a, C, T> {
        config: &'a C,
        #[serde(flatten)]
        body: &'a T,
    }
    to_json(&Document { config, body })
}

/// `# config: {...}` on a single line, numbers at full precision.
pub fn csv_header<C: Serialize>(config: &C) -> Result<String> {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, Compact);
    config.serialize(&mut ser).map_err(io_error)?;
    Ok(format!("# config: {}\n", String::from_utf8(buf).map_err(io_error)?))
}

struct Compact;

impl Formatter for Compact {
    fn write_f64<W: ?Sized + io::Write>(&mut self, w: &mut W, value: f64) -> io::Result<()> {
        w.write_all(format_float(value).as_bytes())
    }
}

fn csv_table(header: String, columns: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<String> {
    let mut out = csv::Writer::from_writer(header.into_bytes());
    out.write_record(columns).map_err(io_error)?;
    for row in rows {
        out.write_record(&row).map_err(io_error)?;
    }
    let bytes = out.into_inner().map_err(io_error)?;
    String::from_utf8(bytes).map_err(io_error)
}

fn complex_cells(z: Complex64) -> [String; 2] {
    [format_float(z.re), format_float(z.im)]
}

pub fn materials_csv(header: String, samples: &[(PolarPoint, MaterialSample)]) -> Result<String> {
    let rows = samples.iter().map(|(p, m)| {
        let [x, y] = p.to_cartesian();
        vec![
            format_float(x),
            format_float(y),
            format_float(m.sigma_radial),
            format_float(m.sigma_tangential),
            format_float(m.lambda),
            m.region.as_str().to_string(),
        ]
    });
    csv_table(header, &["x", "y", "sigma_rr", "sigma_tt", "lambda", "region"], rows)
}

pub fn field_csv(header: String, grid: &FieldGrid) -> Result<String> {
    let rows = grid.points.iter().zip(&grid.values).zip(&grid.region_tags).map(|((p, u), region)| {
        let [re, im] = complex_cells(*u);
        vec![format_float(p.r), format_float(p.theta), re, im, region.as_str().to_string()]
    });
    csv_table(header, &["r", "theta", "re_u", "im_u", "region"], rows)
}

const COEFFICIENT_COLUMNS: [&str; 32] = [
    "n", "re_f", "im_f", "re_p", "im_p", "re_a", "im_a", "re_b", "im_b", "re_c", "im_c", "re_l1", "im_l1",
    "re_l2", "im_l2", "re_s", "im_s", "re_t", "im_t", "re_s_tilde", "im_s_tilde", "re_t_tilde",
    "im_t_tilde", "re_d", "im_d", "re_gain_num", "im_gain_num", "re_gain_den", "im_gain_den",
    "residual_outer", "residual_value", "residual_flux",
];

pub fn coefficients_csv(header: String, solutions: &[ModeSolution]) -> Result<String> {
    let rows = solutions.iter().map(|s| {
        let im = &s.intermediates;
        let mut row = vec![s.input.n.to_string()];
        for z in [
            s.input.f, s.input.p, s.coeffs.a, s.coeffs.b, s.coeffs.c, im.l1, im.l2, im.s, im.t, im.s_tilde,
            im.t_tilde, im.d, im.gain_num, im.gain_den,
        ] {
            row.extend(complex_cells(z));
        }
        row.extend(s.residuals.map(format_float));
        row
    });
    csv_table(header, &COEFFICIENT_COLUMNS, rows)
}

/// Flat variant of the sweep: one row per (mode, k).
pub fn sweep_csv(header: String, report: &SweepReport) -> Result<String> {
    let columns = [
        "n", "k", "truncation", "rho", "residual", "residual_n_squared", "abs_b", "abs_c", "gap_a", "rel_gap_a",
        "dn_dev",
    ];
    let rows = report.per_mode.iter().flat_map(|m| {
        m.rows.iter().map(move |r| {
            let mut row = vec![m.n.to_string(), r.k.to_string()];
            row.extend(
                [
                    r.truncation,
                    r.rho,
                    r.residual,
                    r.residual_n_squared,
                    r.abs_b,
                    r.abs_c,
                    r.gap_a,
                    r.rel_gap_a,
                    r.dn_dev,
                ]
                .map(format_float),
            );
            row
        })
    });
    csv_table(header, &columns, rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde::Deserialize;

    #[test]
    fn floats_round_trip() {
        for x in [0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23, f64::MIN_POSITIVE, 0.0] {
            let s = format_float(x);
            assert_eq!(s.parse::<f64>().unwrap(), x, "{s}");
            let mantissa = s.split('e').next().unwrap();
            assert_eq!(mantissa.chars().filter(|c| c.is_ascii_digit()).count(), 17);
        }
    }

    #[test]
    fn json_numbers_use_full_precision() {
        #[derive(Serialize, Deserialize, PartialEq, Debug)]
        struct Row {
            x: f64,
            z: Complex64,
            k: u32,
        }
        let row = Row { x: 0.1, z: Complex64::new(1.0 / 3.0, -1.0), k: 7 };
        let text = to_json(&row).unwrap();
        assert!(text.contains("1.0000000000000001e-1"), "{text}");
        assert_eq!(serde_json::from_str::<Row>(&text).unwrap(), row);
        let doc = json_document(&serde_json::json!({"omega": 2.0}), &row).unwrap();
        let value: serde_json::Value = serde_json::from_str(&doc).unwrap();
        assert_eq!(value["config"]["omega"], 2.0);
        assert_eq!(value["k"], 7);
    }

    #[test]
    fn csv_header_is_one_comment_line() {
        let header = csv_header(&serde_json::json!({"kappa": 1.0, "source": [[1, 1.0, 0.0]]})).unwrap();
        assert!(header.starts_with("# config: {"));
        assert_eq!(header.lines().count(), 1);
        let table = csv_table(header, &["a", "b"], [vec!["1".into(), "2".into()]]).unwrap();
        assert_eq!(table.lines().nth(1), Some("a,b"));
    }
}
