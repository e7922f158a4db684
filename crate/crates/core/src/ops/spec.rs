//! Textual operator specifications.
//!
//! Every family has a canonical string form, e.g. `gauss:size=5,sigma=1`
//! or `compose:[bilat:ss=8,sr=4;posterize:levels=6]`. Parsing the
//! canonical form of a spec yields the spec back (round-trip fixed
//! point). Keys are positional: each family expects its parameters in
//! canonical order.

use std::fmt;

use thiserror::Error;

use super::{
    Bilateral, BlackBoxOperator, Compose, DctQuantize, DiskBlur, GammaMap, GaussianBlur, Identity,
    MedianFilter, OpError, Posterize, ResampleCycle, ResampleMethod, Scale, SigmoidTone,
    UnsharpMask,
};
use crate::scalar::Scalar;

#[derive(Debug, Error)]
#[error("operator spec error at column {col}: {msg}")]
pub struct SpecParseError {
    pub col: usize,
    pub msg: String,
}

/// Parsed description of a black-box operator.
#[derive(Debug, Clone, PartialEq)]
pub enum OperatorSpec {
    Identity,
    Scale { c: f64 },
    Gauss { size: usize, sigma: f64 },
    Disk { diameter: usize },
    Bilateral { sigma_s: f64, sigma_r: f64 },
    Median { h: usize, w: usize },
    Gamma { g: f64 },
    Sigmoid { a: f64 },
    Posterize { levels: u32 },
    Resample { q: usize, method: ResampleMethod },
    DctQuantize { q: f64 },
    Unsharp { base: Box<OperatorSpec>, alpha: f64 },
    Compose(Vec<OperatorSpec>),
}

impl fmt::Display for OperatorSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            OperatorSpec::Identity => write!(f, "ident"),
            OperatorSpec::Scale { c } => write!(f, "scale:c={c}"),
            OperatorSpec::Gauss { size, sigma } => write!(f, "gauss:size={size},sigma={sigma}"),
            OperatorSpec::Disk { diameter } => write!(f, "disk:d={diameter}"),
            OperatorSpec::Bilateral { sigma_s, sigma_r } => {
                write!(f, "bilat:ss={sigma_s},sr={sigma_r}")
            }
            OperatorSpec::Median { h, w } => write!(f, "median:h={h},w={w}"),
            OperatorSpec::Gamma { g } => write!(f, "gamma:g={g}"),
            OperatorSpec::Sigmoid { a } => write!(f, "sigmoid:a={a}"),
            OperatorSpec::Posterize { levels } => write!(f, "posterize:levels={levels}"),
            OperatorSpec::Resample { q, method } => {
                write!(f, "resample:q={q},method={}", method.name())
            }
            OperatorSpec::DctQuantize { q } => write!(f, "dctq:q={q}"),
            OperatorSpec::Unsharp { base, alpha } => {
                write!(f, "unsharp:base=({base}),alpha={alpha}")
            }
            OperatorSpec::Compose(children) => {
                write!(f, "compose:[")?;
                for (i, c) in children.iter().enumerate() {
                    if i > 0 {
                        write!(f, ";")?;
                    }
                    write!(f, "{c}")?;
                }
                write!(f, "]")
            }
        }
    }
}

impl OperatorSpec {
    /// Canonical string form (inverse of [`OperatorSpec::parse`]).
    pub fn canonical(&self) -> String {
        self.to_string()
    }

    pub fn parse(text: &str) -> Result<Self, SpecParseError> {
        let mut p = Parser {
            text,
            bytes: text.as_bytes(),
            pos: 0,
        };
        let spec = p.spec()?;
        p.skip_ws();
        if p.pos != p.bytes.len() {
            return Err(p.err("trailing characters after operator spec"));
        }
        Ok(spec)
    }

    /// Instantiates the described operator.
    pub fn build<T: Scalar>(&self) -> Result<Box<dyn BlackBoxOperator<T>>, OpError> {
        Ok(match self {
            OperatorSpec::Identity => Box::new(Identity::new()),
            OperatorSpec::Scale { c } => Box::new(Scale::new(*c)?),
            OperatorSpec::Gauss { size, sigma } => Box::new(GaussianBlur::new(*size, *sigma)?),
            OperatorSpec::Disk { diameter } => Box::new(DiskBlur::new(*diameter)?),
            OperatorSpec::Bilateral { sigma_s, sigma_r } => {
                Box::new(Bilateral::new(*sigma_s, *sigma_r)?)
            }
            OperatorSpec::Median { h, w } => Box::new(MedianFilter::new(*h, *w)?),
            OperatorSpec::Gamma { g } => Box::new(GammaMap::new(*g)?),
            OperatorSpec::Sigmoid { a } => Box::new(SigmoidTone::new(*a)?),
            OperatorSpec::Posterize { levels } => Box::new(Posterize::new(*levels)?),
            OperatorSpec::Resample { q, method } => Box::new(ResampleCycle::new(*q, *method)?),
            OperatorSpec::DctQuantize { q } => Box::new(DctQuantize::new(*q)?),
            OperatorSpec::Unsharp { base, alpha } => {
                Box::new(UnsharpMask::new(base.build()?, *alpha)?)
            }
            OperatorSpec::Compose(children) => {
                let built: Result<Vec<_>, OpError> = children.iter().map(|c| c.build()).collect();
                Box::new(Compose::new(built?)?)
            }
        })
    }
}

struct Parser<'a> {
    text: &'a str,
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Parser<'a> {
    fn err(&self, msg: impl Into<String>) -> SpecParseError {
        SpecParseError {
            col: self.pos + 1,
            msg: msg.into(),
        }
    }

    fn skip_ws(&mut self) {
        while matches!(self.bytes.get(self.pos), Some(b) if b.is_ascii_whitespace()) {
            self.pos += 1;
        }
    }

    fn eat(&mut self, ch: u8) -> Result<(), SpecParseError> {
        if self.bytes.get(self.pos) == Some(&ch) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.err(format!("expected '{}'", ch as char)))
        }
    }

    fn ident(&mut self) -> String {
        let start = self.pos;
        while matches!(self.bytes.get(self.pos), Some(b) if b.is_ascii_alphanumeric() || *b == b'_')
        {
            self.pos += 1;
        }
        self.text[start..self.pos].to_string()
    }

    fn key(&mut self, name: &str) -> Result<(), SpecParseError> {
        let got = self.ident();
        if got != name {
            return Err(self.err(format!("expected key '{name}', found '{got}'")));
        }
        self.eat(b'=')
    }

    fn number_text(&mut self) -> Result<&'a str, SpecParseError> {
        let start = self.pos;
        while matches!(self.bytes.get(self.pos), Some(b) if b.is_ascii_digit() || matches!(b, b'.' | b'-' | b'+' | b'e' | b'E'))
        {
            self.pos += 1;
        }
        if self.pos == start {
            return Err(self.err("expected a number"));
        }
        Ok(&self.text[start..self.pos])
    }

    fn f64_value(&mut self) -> Result<f64, SpecParseError> {
        let text = self.number_text()?;
        text.parse()
            .map_err(|_| self.err(format!("invalid number '{text}'")))
    }

    fn usize_value(&mut self) -> Result<usize, SpecParseError> {
        let text = self.number_text()?;
        text.parse()
            .map_err(|_| self.err(format!("invalid integer '{text}'")))
    }

    fn spec(&mut self) -> Result<OperatorSpec, SpecParseError> {
        self.skip_ws();
        let family = self.ident();
        match family.as_str() {
            "ident" => Ok(OperatorSpec::Identity),
            "scale" => {
                self.eat(b':')?;
                self.key("c")?;
                Ok(OperatorSpec::Scale { c: self.f64_value()? })
            }
            "gauss" => {
                self.eat(b':')?;
                self.key("size")?;
                let size = self.usize_value()?;
                self.eat(b',')?;
                self.key("sigma")?;
                Ok(OperatorSpec::Gauss {
                    size,
                    sigma: self.f64_value()?,
                })
            }
            "disk" => {
                self.eat(b':')?;
                self.key("d")?;
                Ok(OperatorSpec::Disk {
                    diameter: self.usize_value()?,
                })
            }
            "bilat" => {
                self.eat(b':')?;
                self.key("ss")?;
                let ss = self.f64_value()?;
                self.eat(b',')?;
                self.key("sr")?;
                Ok(OperatorSpec::Bilateral {
                    sigma_s: ss,
                    sigma_r: self.f64_value()?,
                })
            }
            "median" => {
                self.eat(b':')?;
                self.key("h")?;
                let h = self.usize_value()?;
                self.eat(b',')?;
                self.key("w")?;
                Ok(OperatorSpec::Median {
                    h,
                    w: self.usize_value()?,
                })
            }
            "gamma" => {
                self.eat(b':')?;
                self.key("g")?;
                Ok(OperatorSpec::Gamma { g: self.f64_value()? })
            }
            "sigmoid" => {
                self.eat(b':')?;
                self.key("a")?;
                Ok(OperatorSpec::Sigmoid { a: self.f64_value()? })
            }
            "posterize" => {
                self.eat(b':')?;
                self.key("levels")?;
                Ok(OperatorSpec::Posterize {
                    levels: self.usize_value()? as u32,
                })
            }
            "resample" => {
                self.eat(b':')?;
                self.key("q")?;
                let q = self.usize_value()?;
                self.eat(b',')?;
                self.key("method")?;
                let m = self.ident();
                let method = match m.as_str() {
                    "bilinear" => ResampleMethod::Bilinear,
                    "bicubic" => ResampleMethod::Bicubic,
                    other => return Err(self.err(format!("unknown resample method '{other}'"))),
                };
                Ok(OperatorSpec::Resample { q, method })
            }
            "dctq" => {
                self.eat(b':')?;
                self.key("q")?;
                Ok(OperatorSpec::DctQuantize { q: self.f64_value()? })
            }
            "unsharp" => {
                self.eat(b':')?;
                self.key("base")?;
                self.eat(b'(')?;
                let base = self.spec()?;
                self.eat(b')')?;
                self.eat(b',')?;
                self.key("alpha")?;
                Ok(OperatorSpec::Unsharp {
                    base: Box::new(base),
                    alpha: self.f64_value()?,
                })
            }
            "compose" => {
                self.eat(b':')?;
                self.eat(b'[')?;
                let mut children = vec![self.spec()?];
                loop {
                    self.skip_ws();
                    match self.bytes.get(self.pos) {
                        Some(b';') => {
                            self.pos += 1;
                            children.push(self.spec()?);
                        }
                        Some(b']') => {
                            self.pos += 1;
                            break;
                        }
                        _ => return Err(self.err("expected ';' or ']' in compose list")),
                    }
                }
                Ok(OperatorSpec::Compose(children))
            }
            "" => Err(self.err("expected an operator family name")),
            other => Err(self.err(format!("unknown operator family '{other}'"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn roundtrip(s: &str) {
        let spec = OperatorSpec::parse(s).unwrap();
        assert_eq!(spec.canonical(), s);
        let again = OperatorSpec::parse(&spec.canonical()).unwrap();
        assert_eq!(again, spec);
    }

    #[test]
    fn canonical_roundtrips() {
        roundtrip("ident");
        roundtrip("gauss:size=5,sigma=1");
        roundtrip("disk:d=5");
        roundtrip("bilat:ss=2,sr=1.5");
        roundtrip("median:h=2,w=2");
        roundtrip("sigmoid:a=0.2");
        roundtrip("gamma:g=0.65");
        roundtrip("posterize:levels=6");
        roundtrip("resample:q=2,method=bicubic");
        roundtrip("dctq:q=0.5");
        roundtrip("scale:c=0.8");
        roundtrip("unsharp:base=(bilat:ss=2,sr=1.5),alpha=1");
        roundtrip("compose:[unsharp:base=(bilat:ss=10,sr=3),alpha=1;gamma:g=0.65]");
        roundtrip("compose:[bilat:ss=8,sr=4;bilat:ss=8,sr=4;sigmoid:a=0.25;posterize:levels=6]");
    }

    #[test]
    fn errors_carry_column_positions() {
        let err = OperatorSpec::parse("gauss:size=5,sgma=1").unwrap_err();
        assert!(err.col > 13, "col = {}", err.col);
        assert!(err.msg.contains("sigma"));

        let err = OperatorSpec::parse("blur:x=1").unwrap_err();
        assert!(err.msg.contains("unknown operator family"));
    }

    #[test]
    fn rejects_trailing_garbage() {
        assert!(OperatorSpec::parse("ident junk").is_err());
    }

    #[test]
    fn builds_every_family() {
        for s in [
            "ident",
            "scale:c=0.5",
            "gauss:size=3,sigma=1",
            "disk:d=3",
            "bilat:ss=1,sr=0.5",
            "median:h=3,w=3",
            "gamma:g=0.65",
            "sigmoid:a=0.2",
            "posterize:levels=4",
            "resample:q=2,method=bilinear",
            "dctq:q=2",
            "unsharp:base=(gauss:size=3,sigma=1),alpha=0.5",
            "compose:[ident;gamma:g=2]",
        ] {
            let spec = OperatorSpec::parse(s).unwrap();
            let op = spec.build::<f64>().unwrap();
            let img = crate::image::Image::<f64>::filled(16, 16, 1, 0.5);
            let out = op.evaluate(&img).unwrap();
            assert_eq!(out.shape(), img.shape());
        }
    }
}
