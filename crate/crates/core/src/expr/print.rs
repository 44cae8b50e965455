use std::fmt::{self, Write};

use super::{BinaryOp, Expr, Kind, UnaryOp};

const ADD: u8 = 1;
const MUL: u8 = 2;
const NEG: u8 = 3;
const POW: u8 = 4;
const ATOM: u8 = 5;

fn precedence(e: &Expr) -> u8 {
    match e.kind() {
        Kind::Const(c) if c.is_sign_negative() => ATOM,
        Kind::Const(_) | Kind::Var(_) => ATOM,
        Kind::Binary(BinaryOp::Add | BinaryOp::Sub, ..) => ADD,
        Kind::Binary(BinaryOp::Mul | BinaryOp::Div, ..) => MUL,
        Kind::Unary(UnaryOp::Neg, _) => NEG,
        Kind::Unary(..) => ATOM,
        Kind::Pow(..) => POW,
    }
}

fn write_number(out: &mut impl Write, c: f64) -> fmt::Result {
    if c.is_sign_negative() {
        write!(out, "(-{})", -c)
    } else {
        write!(out, "{c}")
    }
}

fn write_wrapped(out: &mut impl Write, e: &Expr, parens: bool) -> fmt::Result {
    if parens {
        out.write_char('(')?;
        write_expr(out, e)?;
        out.write_char(')')
    } else {
        write_expr(out, e)
    }
}

fn write_expr(out: &mut impl Write, e: &Expr) -> fmt::Result {
    match e.kind() {
        Kind::Const(c) => write_number(out, *c),
        Kind::Var(v) => write!(out, "{v}"),
        Kind::Binary(op, a, b) => {
            let (level, sym) = match op {
                BinaryOp::Add => (ADD, " + "),
                BinaryOp::Sub => (ADD, " - "),
                BinaryOp::Mul => (MUL, " * "),
                BinaryOp::Div => (MUL, " / "),
            };
            write_wrapped(out, a, precedence(a) < level)?;
            out.write_str(sym)?;
            write_wrapped(out, b, precedence(b) <= level)
        }
        Kind::Unary(UnaryOp::Neg, a) => {
            out.write_char('-')?;
            write_wrapped(out, a, precedence(a) < NEG)
        }
        Kind::Unary(op, a) => {
            let name = match op {
                UnaryOp::Sqrt => "sqrt",
                UnaryOp::Exp => "exp",
                UnaryOp::Log => "log",
                UnaryOp::Sin => "sin",
                UnaryOp::Cos => "cos",
                UnaryOp::Neg => unreachable!(),
            };
            write!(out, "{name}(")?;
            write_expr(out, a)?;
            out.write_char(')')
        }
        Kind::Pow(a, c) => {
            write_wrapped(out, a, precedence(a) <= POW)?;
            out.write_char('^')?;
            write_number(out, *c)
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write_expr(f, self)
    }
}

#[cfg(test)]
mod tests {
    use super::super::parse;

    fn round(s: &str) -> String {
        parse(s, 3).unwrap().to_string()
    }

    #[test]
    fn printing_respects_precedence() {
        assert_eq!(round("y1^2 + y2^2"), "y1^2 + y2^2");
        assert_eq!(round("(y1 + y2)*x1"), "(y1 + y2) * x1");
        assert_eq!(round("x1 - (x2 - x3)"), "x1 - (x2 - x3)");
        assert_eq!(round("x1 - x2 - x3"), "x1 - x2 - x3");
        assert_eq!(round("-y1^2"), "-y1^2");
        assert_eq!(round("(-y1)^2"), "(-y1)^2");
        assert_eq!(round("(y1^2)^3"), "(y1^2)^3");
        assert_eq!(round("y1^-1"), "y1^(-1)");
        assert_eq!(round("x1 / (x2 * x3)"), "x1 / (x2 * x3)");
        assert_eq!(round("2 - 5"), "(-3)");
    }

    #[test]
    fn print_parse_print_is_fixed_point() {
        for s in [
            "sqrt(y1^2+y2^2) + 0.3*y1",
            "exp(-x1)*sin(y2)/cos(x2 + 1e-3)",
            "x1 - -y1 * (x2 - -(y2))",
            "log(1 + x1^2)^1.5 - 2.5e-7*y3",
        ] {
            let once = round(s);
            assert_eq!(round(&once), once, "{s}");
        }
    }
}
