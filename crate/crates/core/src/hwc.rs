//! `.hwc` text format: one instruction per line after a `qubits`/`cbits`
//! header. See `docs/hwc-grammar.md` for the grammar.

use std::fmt::Write as _;

use thiserror::Error;

use crate::angle::{as_pi_frac, eval_pi_frac};
use crate::circuit::{Circuit, Condition, Instruction};

/// Formats an angle. Rational multiples of π that evaluate back to the same
/// bits are written as `pi*p/q`, everything else with 17 significant digits.
pub fn format_angle(angle: f64) -> String {
    match as_pi_frac(angle) {
        Some((0, _)) => "0".to_string(),
        Some((p, q)) => {
            let sign = if p < 0 { "-" } else { "" };
            let p = p.unsigned_abs();
            match (p, q) {
                (1, 1) => format!("{sign}pi"),
                (_, 1) => format!("{sign}pi*{p}"),
                _ => format!("{sign}pi*{p}/{q}"),
            }
        }
        None => format!("{angle:.16e}"),
    }
}

fn join<I: IntoIterator<Item = usize>>(prefix: char, items: I, sep: &str) -> String {
    items.into_iter().map(|i| format!("{prefix}{i}")).collect::<Vec<_>>().join(sep)
}

fn write_instruction(out: &mut String, inst: &Instruction) {
    use Instruction::*;
    let _ = match inst {
        H(q) => write!(out, "h q{q}"),
        X(q) => write!(out, "x q{q}"),
        Ry { angle, target } => write!(out, "ry({}) q{target}", format_angle(*angle)),
        Rz { angle, target } => write!(out, "rz({}) q{target}", format_angle(*angle)),
        GlobalPhase(a) => write!(out, "gphase({})", format_angle(*a)),
        Cnot { control, target } => write!(out, "cx q{control}, q{target}"),
        Cz(a, b) => write!(out, "cz q{a}, q{b}"),
        Crz { angle, control, target } => write!(out, "crz({}) q{control}, q{target}", format_angle(*angle)),
        Measure { qubit, cbit } => write!(out, "measure q{qubit} -> c{cbit}"),
        Reset(q) => write!(out, "reset q{q}"),
        Conditioned { condition, gate } => {
            let _ = write!(
                out,
                "if (parity({}) == {}) ",
                join('c', condition.cbits.iter().copied(), ","),
                condition.value as u8
            );
            write_instruction(out, gate);
            Ok(())
        }
        Barrier(qs) if qs.is_empty() => write!(out, "barrier"),
        Barrier(qs) => write!(out, "barrier {}", join('q', qs.iter().copied(), ", ")),
    };
}

/// Serializes `circuit`; every line, including the last, ends in `\n`.
pub fn emit(circuit: &Circuit) -> String {
    let mut out = format!("qubits {}\ncbits {}\n", circuit.num_qubits, circuit.num_cbits);
    for inst in &circuit.instructions {
        write_instruction(&mut out, inst);
        out.push('\n');
    }
    out
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ParseErrorKind {
    #[error("expected `{0}` header")]
    MissingHeader(&'static str),
    #[error("unknown mnemonic `{0}`")]
    UnknownMnemonic(String),
    #[error("expected {0}")]
    Expected(&'static str),
    #[error("qubit index {index} out of range (declared {bound} qubits)")]
    QubitOutOfRange { index: usize, bound: usize },
    #[error("cbit index {index} out of range (declared {bound} cbits)")]
    CbitOutOfRange { index: usize, bound: usize },
    #[error("malformed angle `{0}`")]
    MalformedAngle(String),
    #[error("cbit c{0} is read before any measurement writes it")]
    ReadBeforeWrite(usize),
    #[error("only unitary gates may be conditioned")]
    NonUnitaryConditioned,
    #[error("two-qubit gate repeats qubit q{0}")]
    RepeatedQubit(usize),
    #[error("unexpected trailing input `{0}`")]
    TrailingInput(String),
}

/// A diagnostic anchored at a 1-based line and column.
#[derive(Debug, Clone, PartialEq, Error)]
#[error("line {line}, column {column}: {kind}")]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub kind: ParseErrorKind,
}

struct Cursor<'a> {
    line: usize,
    src: &'a str,
    pos: usize,
}

type PResult<T> = Result<T, ParseError>;

impl<'a> Cursor<'a> {
    fn column(&self, pos: usize) -> usize {
        self.src[..pos].chars().count() + 1
    }

    fn error_at(&self, pos: usize, kind: ParseErrorKind) -> ParseError {
        ParseError { line: self.line, column: self.column(pos), kind }
    }

    fn rest(&self) -> &'a str {
        &self.src[self.pos..]
    }

    fn skip_ws(&mut self) {
        let trimmed = self.rest().trim_start();
        self.pos = self.src.len() - trimmed.len();
    }

    fn eat(&mut self, token: &str) -> bool {
        self.skip_ws();
        if self.rest().starts_with(token) {
            self.pos += token.len();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, token: &'static str) -> PResult<()> {
        if self.eat(token) {
            Ok(())
        } else {
            Err(self.error_at(self.pos, ParseErrorKind::Expected(token)))
        }
    }

    fn take_while(&mut self, pred: impl Fn(char) -> bool) -> (usize, &'a str) {
        self.skip_ws();
        let start = self.pos;
        let len = self.rest().find(|c: char| !pred(c)).unwrap_or(self.rest().len());
        self.pos += len;
        (start, &self.src[start..self.pos])
    }

    fn ident(&mut self) -> (usize, &'a str) {
        self.take_while(|c| c.is_ascii_alphanumeric() || c == '_')
    }

    fn uint(&mut self, what: &'static str) -> PResult<(usize, usize)> {
        let (start, digits) = self.take_while(|c| c.is_ascii_digit());
        digits.parse().map(|v| (start, v)).map_err(|_| self.error_at(start, ParseErrorKind::Expected(what)))
    }

    fn indexed(&mut self, prefix: &'static str, what: &'static str, bound: usize) -> PResult<usize> {
        self.skip_ws();
        let start = self.pos;
        if !self.eat(prefix) {
            return Err(self.error_at(start, ParseErrorKind::Expected(what)));
        }
        let (_, index) = self.uint(what)?;
        if index >= bound {
            let kind = if prefix == "q" {
                ParseErrorKind::QubitOutOfRange { index, bound }
            } else {
                ParseErrorKind::CbitOutOfRange { index, bound }
            };
            return Err(self.error_at(start, kind));
        }
        Ok(index)
    }

    fn angle(&mut self) -> PResult<f64> {
        self.expect("(")?;
        self.skip_ws();
        let start = self.pos;
        let len = self.rest().find(')').ok_or_else(|| self.error_at(self.src.len(), ParseErrorKind::Expected(")")))?;
        let text = self.rest()[..len].trim();
        self.pos += len + 1;
        parse_angle(text).ok_or_else(|| self.error_at(start, ParseErrorKind::MalformedAngle(text.to_string())))
    }

    fn finish(&mut self) -> PResult<()> {
        self.skip_ws();
        if self.pos < self.src.len() {
            return Err(self.error_at(self.pos, ParseErrorKind::TrailingInput(self.rest().to_string())));
        }
        Ok(())
    }
}

/// Parses `pi`, `pi*p`, `pi*p/q` (optionally signed) or a decimal float.
pub fn parse_angle(text: &str) -> Option<f64> {
    let (neg, body) = match text.strip_prefix('-') {
        Some(rest) => (true, rest.trim_start()),
        None => (false, text.strip_prefix('+').unwrap_or(text).trim_start()),
    };
    if let Some(rest) = body.strip_prefix("pi") {
        let rest = rest.trim();
        let (p, q) = if rest.is_empty() {
            (1i64, 1u64)
        } else {
            let frac = rest.strip_prefix('*')?.trim();
            match frac.split_once('/') {
                Some((p, q)) => (p.trim().parse().ok()?, q.trim().parse().ok()?),
                None => (frac.parse().ok()?, 1),
            }
        };
        if q == 0 || p < 0 {
            return None;
        }
        return Some(eval_pi_frac(if neg { -p } else { p }, q));
    }
    if body.starts_with(|c: char| c.is_ascii_digit() || c == '.') {
        let value: f64 = body.parse().ok()?;
        if value.is_finite() {
            return Some(if neg { -value } else { value });
        }
    }
    None
}

struct Parser {
    num_qubits: usize,
    num_cbits: usize,
    written: Vec<bool>,
}

impl Parser {
    fn qubit(&self, cur: &mut Cursor<'_>) -> PResult<usize> {
        cur.indexed("q", "qubit operand `q<i>`", self.num_qubits)
    }

    fn qubit_pair(&self, cur: &mut Cursor<'_>) -> PResult<(usize, usize)> {
        let a = self.qubit(cur)?;
        cur.expect(",")?;
        cur.skip_ws();
        let at = cur.pos;
        let b = self.qubit(cur)?;
        if a == b {
            return Err(cur.error_at(at, ParseErrorKind::RepeatedQubit(b)));
        }
        Ok((a, b))
    }

    fn instruction(&mut self, cur: &mut Cursor<'_>) -> PResult<Instruction> {
        let (start, word) = cur.ident();
        let inst = match word {
            "h" => Instruction::H(self.qubit(cur)?),
            "x" => Instruction::X(self.qubit(cur)?),
            "ry" => {
                let angle = cur.angle()?;
                Instruction::Ry { angle, target: self.qubit(cur)? }
            }
            "rz" => {
                let angle = cur.angle()?;
                Instruction::Rz { angle, target: self.qubit(cur)? }
            }
            "gphase" => Instruction::GlobalPhase(cur.angle()?),
            "cx" => {
                let (control, target) = self.qubit_pair(cur)?;
                Instruction::Cnot { control, target }
            }
            "cz" => {
                let (a, b) = self.qubit_pair(cur)?;
                Instruction::Cz(a, b)
            }
            "crz" => {
                let angle = cur.angle()?;
                let (control, target) = self.qubit_pair(cur)?;
                Instruction::Crz { angle, control, target }
            }
            "measure" => {
                let qubit = self.qubit(cur)?;
                cur.expect("->")?;
                let cbit = cur.indexed("c", "cbit operand `c<j>`", self.num_cbits)?;
                self.written[cbit] = true;
                Instruction::Measure { qubit, cbit }
            }
            "reset" => Instruction::Reset(self.qubit(cur)?),
            "barrier" => {
                let mut qs = Vec::new();
                cur.skip_ws();
                if cur.pos < cur.src.len() {
                    qs.push(self.qubit(cur)?);
                    while cur.eat(",") {
                        qs.push(self.qubit(cur)?);
                    }
                }
                Instruction::Barrier(qs)
            }
            "if" => return self.conditioned(cur),
            "" => return Err(cur.error_at(start, ParseErrorKind::Expected("instruction mnemonic"))),
            other => return Err(cur.error_at(start, ParseErrorKind::UnknownMnemonic(other.to_string()))),
        };
        Ok(inst)
    }

    fn conditioned(&mut self, cur: &mut Cursor<'_>) -> PResult<Instruction> {
        cur.expect("(")?;
        cur.expect("parity")?;
        cur.expect("(")?;
        let mut cbits = Vec::new();
        loop {
            cur.skip_ws();
            let at = cur.pos;
            let c = cur.indexed("c", "cbit operand `c<j>`", self.num_cbits)?;
            if !self.written[c] {
                return Err(cur.error_at(at, ParseErrorKind::ReadBeforeWrite(c)));
            }
            cbits.push(c);
            if !cur.eat(",") {
                break;
            }
        }
        cur.expect(")")?;
        cur.expect("==")?;
        let (at, value) = cur.uint("condition value 0 or 1")?;
        if value > 1 {
            return Err(cur.error_at(at, ParseErrorKind::Expected("condition value 0 or 1")));
        }
        cur.expect(")")?;
        cur.skip_ws();
        let gate_at = cur.pos;
        let gate = self.instruction(cur)?;
        if !gate.is_unitary() {
            return Err(cur.error_at(gate_at, ParseErrorKind::NonUnitaryConditioned));
        }
        Ok(Instruction::conditioned(Condition::parity(cbits, value == 1), gate))
    }
}

fn header<'a>(lines: &mut impl Iterator<Item = (usize, &'a str)>, key: &'static str, last_line: usize) -> PResult<usize> {
    let Some((line, src)) = lines.next() else {
        return Err(ParseError { line: last_line + 1, column: 1, kind: ParseErrorKind::MissingHeader(key) });
    };
    let mut cur = Cursor { line, src, pos: 0 };
    let (start, word) = cur.ident();
    if word != key {
        return Err(cur.error_at(start, ParseErrorKind::MissingHeader(key)));
    }
    let (_, value) = cur.uint("count")?;
    cur.finish()?;
    Ok(value)
}

/// Parses `.hwc` text. `#` starts a comment; blank lines are ignored.
pub fn parse(text: &str) -> Result<Circuit, ParseError> {
    let total = text.lines().count();
    let mut lines = text.lines().enumerate().filter_map(|(i, raw)| {
        let body = raw.split('#').next().unwrap_or("");
        (!body.trim().is_empty()).then_some((i + 1, body))
    });
    let num_qubits = header(&mut lines, "qubits", total)?;
    let num_cbits = header(&mut lines, "cbits", total)?;
    let mut parser = Parser { num_qubits, num_cbits, written: vec![false; num_cbits] };
    let mut circuit = Circuit::new(num_qubits, num_cbits);
    for (line, src) in lines {
        let mut cur = Cursor { line, src, pos: 0 };
        let inst = parser.instruction(&mut cur)?;
        cur.finish()?;
        circuit.instructions.push(inst);
    }
    Ok(circuit)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn emits_simple_circuit() {
        let mut c = Circuit::new(1, 1);
        c.h(0).measure(0, 0);
        assert_eq!(emit(&c), "qubits 1\ncbits 1\nh q0\nmeasure q0 -> c0\n");
    }

    #[test]
    fn angle_forms() {
        assert_eq!(format_angle(PI / 2.0), "pi*1/2");
        assert_eq!(format_angle(-PI / 4.0), "-pi*1/4");
        assert_eq!(format_angle(PI), "pi");
        assert_eq!(format_angle(3.0 * PI), "pi*3");
        assert_eq!(format_angle(0.0), "0");
        assert_eq!(format_angle(1.0), "1.0000000000000000e0");
        for text in ["pi*1/2", "-pi*1/4", "pi", "pi*3", "0", "1.0000000000000000e0", "0.5", "-2.5e-3"] {
            let v = parse_angle(text).unwrap();
            assert_eq!(parse_angle(&format_angle(v)).unwrap().to_bits(), v.to_bits(), "{text}");
        }
        for bad in ["", "pi*", "pi/2", "pi*1/0", "abc", "nan", "inf", "pi*-1/2"] {
            assert!(parse_angle(bad).is_none(), "{bad}");
        }
    }

    #[test]
    fn parses_minimal_and_conditions() {
        let c = parse("qubits 1\ncbits 0\nh q0").unwrap();
        assert_eq!(c.num_qubits, 1);
        assert_eq!(c.instructions, vec![Instruction::H(0)]);

        let text = "qubits 4\ncbits 2\nmeasure q0 -> c0\nmeasure q1 -> c1\nif (parity(c0,c1) == 1) x q3\n";
        let c = parse(text).unwrap();
        assert_eq!(c.instructions[2], Instruction::conditioned(Condition::parity([0, 1], true), Instruction::X(3)));
    }

    #[test]
    fn comments_and_whitespace() {
        let text = "# header\n  qubits   2 # two\ncbits 1\n\n   cx   q0 ,q1   # entangle\nbarrier\nbarrier q0,q1\n";
        let c = parse(text).unwrap();
        assert_eq!(
            c.instructions,
            vec![Instruction::Cnot { control: 0, target: 1 }, Instruction::Barrier(vec![]), Instruction::Barrier(vec![0, 1])]
        );
    }

    #[test]
    fn diagnostics_are_line_anchored() {
        let err = parse("qubits 2\ncbits 0\nh q5").unwrap_err();
        assert_eq!((err.line, err.column), (3, 3));
        assert_eq!(err.kind, ParseErrorKind::QubitOutOfRange { index: 5, bound: 2 });
        assert!(err.to_string().starts_with("line 3, column 3:"));

        let cases: &[(&str, usize, ParseErrorKind)] = &[
            ("qubits 1\ncbits 0\nfoo q0", 3, ParseErrorKind::UnknownMnemonic("foo".into())),
            ("qubits 1\ncbits 0\nrz(pi*x) q0", 3, ParseErrorKind::MalformedAngle("pi*x".into())),
            ("qubits 1\ncbits 1\nif (parity(c0) == 1) x q0", 3, ParseErrorKind::ReadBeforeWrite(0)),
            ("qubits 1\ncbits 1\nmeasure q0 -> c0\nif (parity(c0) == 1) reset q0", 4, ParseErrorKind::NonUnitaryConditioned),
            ("qubits 2\ncbits 0\ncx q1, q1", 3, ParseErrorKind::RepeatedQubit(1)),
            ("qubits 1\ncbits 0\nh q0 q0", 3, ParseErrorKind::TrailingInput("q0".into())),
            ("cbits 0\nqubits 1", 1, ParseErrorKind::MissingHeader("qubits")),
            ("qubits 1\n", 2, ParseErrorKind::MissingHeader("cbits")),
            ("qubits 1\ncbits 1\nmeasure q0 -> c1", 3, ParseErrorKind::CbitOutOfRange { index: 1, bound: 1 }),
        ];
        for (text, line, kind) in cases {
            let err = parse(text).unwrap_err();
            assert_eq!(err.line, *line, "{text}");
            assert_eq!(&err.kind, kind, "{text}");
        }
    }
}
