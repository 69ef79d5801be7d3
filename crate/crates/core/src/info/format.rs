//! Plain-text law tables.
//!
//! ```text
//! # Gel'fand-Pinsker channel
//! kind gp
//! alphabets s=2 x=2 y=2 u=2
//! p_s
//! 0.5 0.5
//! channel          # |X|*|S| rows of |Y| entries, row (x, s) at x*|S| + s
//! 0.9 0.1
//! ...
//! aux              # optional: |S| rows of |U| entries, p(u|s)
//! map              # optional: |U| rows of |S| input symbols
//! ```
//!
//! ```text
//! kind wz
//! alphabets x=2 y=2 u=2 xhat=2
//! p_xy             # |X| rows of |Y| entries
//! distortion       # optional: |X| rows of |Xhat| entries, Hamming if absent
//! aux              # optional: |X| rows of |U| entries, p(u|x)
//! map              # optional: |U| rows of |Y| reconstruction symbols
//! ```
//!
//! Tokens are whitespace separated; `#` starts a comment.

use std::collections::HashMap;
use std::fmt::Write as _;

use super::law::{check_pmf, ConditionalLaw, GpChannel, GpLaw, WzLaw, WzSource};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum LawFile {
    Gp {
        channel: GpChannel,
        aux_size: usize,
        law: Option<GpLaw>,
    },
    Wz {
        source: WzSource,
        aux_size: usize,
        law: Option<WzLaw>,
    },
}

struct Section {
    line: usize,
    rows: Vec<(usize, Vec<String>)>,
}

fn config_err(line: usize, message: impl Into<String>) -> Error {
    Error::Config {
        line,
        message: message.into(),
    }
}

pub fn parse_law(text: &str) -> Result<LawFile> {
    let mut kind: Option<(usize, String)> = None;
    let mut sizes: HashMap<String, usize> = HashMap::new();
    let mut sizes_line = 0;
    let mut sections: HashMap<String, Section> = HashMap::new();
    let mut current: Option<String> = None;

    for (k, raw) in text.lines().enumerate() {
        let line = k + 1;
        let body = raw.split('#').next().unwrap_or("").trim();
        if body.is_empty() {
            continue;
        }
        let tokens: Vec<String> = body.split_whitespace().map(str::to_owned).collect();
        let head = tokens[0].as_str();
        match head {
            "kind" => {
                let v = tokens.get(1).ok_or_else(|| config_err(line, "`kind` needs a value"))?;
                kind = Some((line, v.clone()));
                current = None;
            }
            "alphabets" => {
                sizes_line = line;
                for t in &tokens[1..] {
                    let (name, v) = t
                        .split_once('=')
                        .ok_or_else(|| config_err(line, format!("expected name=size, got `{t}`")))?;
                    let v: usize = v
                        .parse()
                        .map_err(|_| config_err(line, format!("alphabet size `{v}` is not a positive integer")))?;
                    if v == 0 {
                        return Err(config_err(line, format!("alphabet `{name}` is empty")));
                    }
                    sizes.insert(name.to_owned(), v);
                }
                current = None;
            }
            "p_s" | "channel" | "aux" | "map" | "p_xy" | "distortion" => {
                if tokens.len() > 1 {
                    return Err(config_err(line, format!("section header `{head}` takes no values")));
                }
                if sections.contains_key(head) {
                    return Err(config_err(line, format!("duplicate section `{head}`")));
                }
                sections.insert(head.to_owned(), Section { line, rows: Vec::new() });
                current = Some(head.to_owned());
            }
            _ => {
                let name = current
                    .as_ref()
                    .ok_or_else(|| config_err(line, format!("unexpected `{head}` outside a section")))?;
                sections
                    .get_mut(name)
                    .expect("section registered")
                    .rows
                    .push((line, tokens));
            }
        }
    }

    let (kind_line, kind) = kind.ok_or_else(|| config_err(0, "missing `kind` line"))?;
    let size = |name: &str| -> Result<usize> {
        sizes
            .get(name)
            .copied()
            .ok_or_else(|| config_err(sizes_line, format!("alphabets line lacks `{name}`")))
    };
    match kind.as_str() {
        "gp" => {
            let (ns, nx, ny, nu) = (size("s")?, size("x")?, size("y")?, size("u")?);
            let p_s = real_table(&sections, "p_s", 1, ns)?.remove(0);
            check_pmf(&p_s, "p_s").map_err(|e| at_section(&sections, "p_s", e))?;
            let flat = real_table(&sections, "channel", nx * ns, ny)?;
            let transition = flat.chunks(ns).map(<[Vec<f64>]>::to_vec).collect();
            let channel = GpChannel::new(p_s, transition).map_err(|e| at_section(&sections, "channel", e))?;
            let law = match optional_pair(&sections)? {
                false => None,
                true => {
                    let aux = ConditionalLaw::new(real_table(&sections, "aux", ns, nu)?)
                        .map_err(|e| at_section(&sections, "aux", e))?;
                    let map = index_table(&sections, "map", nu, ns, nx)?;
                    Some(GpLaw::new(channel.clone(), aux, map).map_err(|e| at_section(&sections, "map", e))?)
                }
            };
            Ok(LawFile::Gp {
                channel,
                aux_size: nu,
                law,
            })
        }
        "wz" => {
            let (nx, ny, nu) = (size("x")?, size("y")?, size("u")?);
            let nh = sizes.get("xhat").copied().unwrap_or(nx);
            let joint = real_table(&sections, "p_xy", nx, ny)?;
            let distortion = match sections.contains_key("distortion") {
                true => Some(real_table(&sections, "distortion", nx, nh)?),
                false if nh == nx => None,
                false => {
                    return Err(config_err(
                        sizes_line,
                        "xhat differs from x, so a distortion table is required",
                    ))
                }
            };
            let source = WzSource::new(joint, distortion).map_err(|e| at_section(&sections, "p_xy", e))?;
            let law = match optional_pair(&sections)? {
                false => None,
                true => {
                    let aux = ConditionalLaw::new(real_table(&sections, "aux", nx, nu)?)
                        .map_err(|e| at_section(&sections, "aux", e))?;
                    let map = index_table(&sections, "map", nu, ny, nh)?;
                    Some(WzLaw::new(source.clone(), aux, map).map_err(|e| at_section(&sections, "map", e))?)
                }
            };
            Ok(LawFile::Wz {
                source,
                aux_size: nu,
                law,
            })
        }
        other => Err(config_err(
            kind_line,
            format!("unknown kind `{other}`, expected gp or wz"),
        )),
    }
}

fn at_section(sections: &HashMap<String, Section>, name: &str, e: Error) -> Error {
    let line = sections.get(name).map(|s| s.line).unwrap_or(0);
    config_err(line, e.to_string())
}

fn optional_pair(sections: &HashMap<String, Section>) -> Result<bool> {
    match (sections.get("aux"), sections.get("map")) {
        (Some(_), Some(_)) => Ok(true),
        (None, None) => Ok(false),
        (Some(s), None) | (None, Some(s)) => Err(config_err(s.line, "`aux` and `map` must be given together")),
    }
}

fn section<'a>(sections: &'a HashMap<String, Section>, name: &str) -> Result<&'a Section> {
    sections
        .get(name)
        .ok_or_else(|| config_err(0, format!("missing section `{name}`")))
}

fn real_table(sections: &HashMap<String, Section>, name: &str, rows: usize, cols: usize) -> Result<Vec<Vec<f64>>> {
    let s = section(sections, name)?;
    if s.rows.len() != rows {
        return Err(config_err(
            s.line,
            format!("`{name}` needs {rows} rows, found {}", s.rows.len()),
        ));
    }
    s.rows
        .iter()
        .map(|(line, toks)| {
            if toks.len() != cols {
                return Err(config_err(
                    *line,
                    format!("expected {cols} entries, found {}", toks.len()),
                ));
            }
            toks.iter()
                .map(|t| {
                    t.parse::<f64>()
                        .map_err(|_| config_err(*line, format!("`{t}` is not a number")))
                })
                .collect()
        })
        .collect()
}

fn index_table(
    sections: &HashMap<String, Section>,
    name: &str,
    rows: usize,
    cols: usize,
    range: usize,
) -> Result<Vec<Vec<usize>>> {
    let s = section(sections, name)?;
    if s.rows.len() != rows {
        return Err(config_err(
            s.line,
            format!("`{name}` needs {rows} rows, found {}", s.rows.len()),
        ));
    }
    s.rows
        .iter()
        .map(|(line, toks)| {
            if toks.len() != cols {
                return Err(config_err(
                    *line,
                    format!("expected {cols} entries, found {}", toks.len()),
                ));
            }
            toks.iter()
                .map(|t| match t.parse::<usize>() {
                    Ok(v) if v < range => Ok(v),
                    _ => Err(config_err(*line, format!("`{t}` is not a symbol below {range}"))),
                })
                .collect()
        })
        .collect()
}

fn push_rows(out: &mut String, rows: &[Vec<f64>]) {
    for r in rows {
        let cells: Vec<String> = r.iter().map(|v| format!("{v:?}")).collect();
        out.push_str(&cells.join(" "));
        out.push('\n');
    }
}

fn push_index_rows(out: &mut String, rows: &[Vec<usize>]) {
    for r in rows {
        let cells: Vec<String> = r.iter().map(usize::to_string).collect();
        out.push_str(&cells.join(" "));
        out.push('\n');
    }
}

pub fn write_gp_law(law: &GpLaw) -> String {
    let ch = &law.channel;
    let mut out = String::from("kind gp\n");
    let _ = writeln!(
        out,
        "alphabets s={} x={} y={} u={}",
        ch.num_states(),
        ch.num_inputs(),
        ch.num_outputs(),
        law.num_aux()
    );
    out.push_str("p_s\n");
    push_rows(&mut out, std::slice::from_ref(&ch.state));
    out.push_str("channel\n");
    let flat: Vec<Vec<f64>> = ch.transition.iter().flatten().cloned().collect();
    push_rows(&mut out, &flat);
    out.push_str("aux\n");
    push_rows(&mut out, law.aux.rows());
    out.push_str("map\n");
    push_index_rows(&mut out, &law.map);
    out
}

pub fn write_wz_law(law: &WzLaw) -> String {
    let src = &law.source;
    let mut out = String::from("kind wz\n");
    let _ = writeln!(
        out,
        "alphabets x={} y={} u={} xhat={}",
        src.num_source(),
        src.num_side(),
        law.num_aux(),
        src.num_reconstruction()
    );
    out.push_str("p_xy\n");
    push_rows(&mut out, &src.joint);
    out.push_str("distortion\n");
    push_rows(&mut out, &src.distortion);
    out.push_str("aux\n");
    push_rows(&mut out, law.aux.rows());
    out.push_str("map\n");
    push_index_rows(&mut out, &law.map);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    const GP: &str = "\
# binary additive state
kind gp
alphabets s=2 x=2 y=2 u=2
p_s
0.5 0.5
channel
0.9 0.1
0.1 0.9
0.1 0.9
0.9 0.1
aux
0.5 0.5
0.5 0.5
map
0 1
1 0
";

    #[test]
    fn gp_round_trip() {
        let LawFile::Gp { law: Some(law), .. } = parse_law(GP).unwrap() else {
            panic!("expected a complete gp law")
        };
        assert_eq!(law.channel, GpChannel::binary_additive(0.5, 0.1).unwrap());
        let again = parse_law(&write_gp_law(&law)).unwrap();
        assert_eq!(
            again,
            LawFile::Gp {
                channel: law.channel.clone(),
                aux_size: 2,
                law: Some(law)
            }
        );
    }

    #[test]
    fn wz_without_aux_is_a_search_problem() {
        let text = "kind wz\nalphabets x=2 y=2 u=2\np_xy\n0.375 0.125\n0.125 0.375\n";
        let LawFile::Wz { source, law, .. } = parse_law(text).unwrap() else {
            panic!()
        };
        assert!(law.is_none());
        assert_eq!(source, WzSource::doubly_symmetric(0.25).unwrap());
    }

    #[test]
    fn wz_round_trip() {
        let law = WzLaw::new(
            WzSource::doubly_symmetric(0.25).unwrap(),
            ConditionalLaw::binary_symmetric(0.1).unwrap(),
            vec![vec![0, 0], vec![1, 1]],
        )
        .unwrap();
        let LawFile::Wz { law: Some(back), .. } = parse_law(&write_wz_law(&law)).unwrap() else {
            panic!()
        };
        assert_eq!(back, law);
    }

    #[test]
    fn diagnostics_carry_line_numbers() {
        let bad = GP.replace("0.9 0.1\n0.1 0.9\n0.1", "0.9 0.1\n0.1 zz\n0.1");
        match parse_law(&bad) {
            Err(Error::Config { line, .. }) => assert_eq!(line, 8),
            other => panic!("unexpected {other:?}"),
        }
        let unnormalised = GP.replace("p_s\n0.5 0.5", "p_s\n0.5 0.6");
        assert!(matches!(parse_law(&unnormalised), Err(Error::Config { line: 4, .. })));
        assert!(matches!(parse_law("kind foo\n"), Err(Error::Config { line: 1, .. })));
        let half = GP.split("map").next().unwrap();
        assert!(matches!(parse_law(half), Err(Error::Config { .. })));
    }
}
