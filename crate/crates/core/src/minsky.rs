//! Two-counter (Minsky) machines: `.mm` text format, validation, and an
//! exact step interpreter producing per-step counter/control traces.

use std::fmt;

use thiserror::Error;

use crate::formula::Int;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Reg {
    C1,
    C2,
}

impl Reg {
    pub fn index(self) -> usize {
        match self {
            Reg::C1 => 1,
            Reg::C2 => 2,
        }
    }

    fn parse(tok: &str) -> Option<Reg> {
        match tok {
            "1" => Some(Reg::C1),
            "2" => Some(Reg::C2),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Instr {
    Inc(Reg),
    Dec(Reg),
    /// Jump to the target instruction when the register is zero,
    /// fall through otherwise.
    Jz(Reg, usize),
    Halt,
}

impl fmt::Display for Instr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Instr::Inc(r) => write!(f, "inc {}", r.index()),
            Instr::Dec(r) => write!(f, "dec {}", r.index()),
            Instr::Jz(r, j) => write!(f, "jz {} {}", r.index(), j),
            Instr::Halt => f.write_str("halt"),
        }
    }
}

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum MachineParseError {
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error("line {line}: jump target {target} outside [1, {n}]")]
    BadJumpTarget { line: usize, target: usize, n: usize },
    #[error("the final instruction must be `halt`")]
    MissingHalt,
}

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum MinskyError {
    #[error("instruction q{q} decrements counter c{counter} which is zero")]
    DecrementAtZero { q: usize, counter: usize },
    #[error("control location {q} outside [1, {n}]")]
    BadControl { q: usize, n: usize },
}

/// Instruction list; by convention instruction `n` is `halt` and reaching
/// `q = n` means the machine has halted.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MinskyMachine {
    instrs: Vec<Instr>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct MinskyConfig {
    pub q: usize,
    pub c1: Int,
    pub c2: Int,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MinskyStep {
    Next(MinskyConfig),
    Halted,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MinskyTrace {
    pub configs: Vec<MinskyConfig>,
    /// First step index at which `q = n`, if reached within the budget.
    pub halted_at: Option<usize>,
}

impl MinskyTrace {
    pub fn config(&self, t: usize) -> Option<&MinskyConfig> {
        self.configs.get(t)
    }

    /// Value of `c1` after `t` steps.
    pub fn f1(&self, t: usize) -> Option<Int> {
        self.config(t).map(|c| c.c1)
    }

    /// Value of `c2` after `t` steps.
    pub fn f2(&self, t: usize) -> Option<Int> {
        self.config(t).map(|c| c.c2)
    }

    /// Control location after `t` steps.
    pub fn fq(&self, t: usize) -> Option<usize> {
        self.config(t).map(|c| c.q)
    }
}

impl MinskyMachine {
    /// Parses the `.mm` line format: `inc k`, `dec k`, `jz k j`, `halt`,
    /// with `#` comments; instructions are numbered 1.. in order.
    pub fn parse(text: &str) -> Result<MinskyMachine, MachineParseError> {
        let mut instrs = Vec::new();
        let mut source_lines = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let body = raw.split('#').next().unwrap_or("").trim();
            if body.is_empty() {
                continue;
            }
            let toks: Vec<&str> = body.split_whitespace().collect();
            let syntax = |msg: String| MachineParseError::Syntax { line, msg };
            let reg = |tok: &str| {
                Reg::parse(tok).ok_or_else(|| syntax(format!("counter must be 1 or 2, got `{tok}`")))
            };
            let instr = match toks.as_slice() {
                ["inc", k] => Instr::Inc(reg(k)?),
                ["dec", k] => Instr::Dec(reg(k)?),
                ["jz", k, j] => {
                    let target: usize = j
                        .parse()
                        .map_err(|_| syntax(format!("bad jump target `{j}`")))?;
                    Instr::Jz(reg(k)?, target)
                }
                ["halt"] => Instr::Halt,
                _ => return Err(syntax(format!("unrecognized instruction `{body}`"))),
            };
            instrs.push(instr);
            source_lines.push(line);
        }
        match instrs.last() {
            Some(Instr::Halt) => {}
            _ => return Err(MachineParseError::MissingHalt),
        }
        let n = instrs.len();
        for (i, instr) in instrs.iter().enumerate() {
            if matches!(instr, Instr::Halt) && i != n - 1 {
                return Err(MachineParseError::Syntax {
                    line: source_lines[i],
                    msg: "`halt` is only allowed as the final instruction".to_owned(),
                });
            }
            if let Instr::Jz(_, j) = instr {
                if *j < 1 || *j > n {
                    return Err(MachineParseError::BadJumpTarget {
                        line: source_lines[i],
                        target: *j,
                        n,
                    });
                }
            }
        }
        Ok(MinskyMachine { instrs })
    }

    /// Instruction count; `q = n` is the halting location.
    pub fn n(&self) -> usize {
        self.instrs.len()
    }

    pub fn instrs(&self) -> &[Instr] {
        &self.instrs
    }

    /// The `.mm` source text of the machine.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for i in &self.instrs {
            out.push_str(&i.to_string());
            out.push('\n');
        }
        out
    }

    pub fn initial_config() -> MinskyConfig {
        MinskyConfig { q: 1, c1: 0, c2: 0 }
    }

    pub fn step(&self, cfg: &MinskyConfig) -> Result<MinskyStep, MinskyError> {
        let n = self.n();
        if cfg.q < 1 || cfg.q > n {
            return Err(MinskyError::BadControl { q: cfg.q, n });
        }
        if cfg.q == n {
            return Ok(MinskyStep::Halted);
        }
        let reg_value = |r: Reg| match r {
            Reg::C1 => cfg.c1,
            Reg::C2 => cfg.c2,
        };
        let with_reg = |r: Reg, value: Int, q: usize| {
            let (c1, c2) = match r {
                Reg::C1 => (value, cfg.c2),
                Reg::C2 => (cfg.c1, value),
            };
            MinskyConfig { q, c1, c2 }
        };
        let next = match self.instrs[cfg.q - 1] {
            Instr::Inc(r) => with_reg(r, reg_value(r) + 1, cfg.q + 1),
            Instr::Dec(r) => {
                if reg_value(r) == 0 {
                    return Err(MinskyError::DecrementAtZero {
                        q: cfg.q,
                        counter: r.index(),
                    });
                }
                with_reg(r, reg_value(r) - 1, cfg.q + 1)
            }
            Instr::Jz(r, j) => {
                let q = if reg_value(r) == 0 { j } else { cfg.q + 1 };
                MinskyConfig { q, ..*cfg }
            }
            Instr::Halt => unreachable!("interior halt rejected at parse time"),
        };
        Ok(MinskyStep::Next(next))
    }

    /// Runs from `(q=1, c1=0, c2=0)` for at most `t_max` steps.
    pub fn run(&self, t_max: usize) -> Result<MinskyTrace, MinskyError> {
        let mut configs = vec![Self::initial_config()];
        let mut halted_at = None;
        for t in 0..=t_max {
            let cfg = configs[t];
            if cfg.q == self.n() {
                halted_at = Some(t);
                break;
            }
            if t == t_max {
                break;
            }
            match self.step(&cfg)? {
                MinskyStep::Next(next) => configs.push(next),
                MinskyStep::Halted => unreachable!("halt handled above"),
            }
        }
        Ok(MinskyTrace { configs, halted_at })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn machine(text: &str) -> MinskyMachine {
        MinskyMachine::parse(text).unwrap()
    }

    #[test]
    fn parses_three_instruction_machine() {
        let m = machine("inc 1\ninc 1\nhalt");
        assert_eq!(m.n(), 3);
        assert_eq!(
            m.instrs(),
            &[Instr::Inc(Reg::C1), Instr::Inc(Reg::C1), Instr::Halt]
        );
    }

    #[test]
    fn parses_comments_and_blank_lines() {
        let m = machine("# looping machine\n\njz 1 1  # self loop\nhalt\n");
        assert_eq!(m.n(), 2);
        assert_eq!(m.instrs()[0], Instr::Jz(Reg::C1, 1));
    }

    #[test]
    fn parse_rejects_missing_halt() {
        assert_eq!(
            MinskyMachine::parse("inc 1\n"),
            Err(MachineParseError::MissingHalt)
        );
        assert_eq!(MinskyMachine::parse(""), Err(MachineParseError::MissingHalt));
    }

    #[test]
    fn parse_rejects_bad_jump_target() {
        assert_eq!(
            MinskyMachine::parse("jz 1 3\nhalt"),
            Err(MachineParseError::BadJumpTarget {
                line: 1,
                target: 3,
                n: 2
            })
        );
    }

    #[test]
    fn parse_rejects_interior_halt() {
        assert!(matches!(
            MinskyMachine::parse("halt\nhalt"),
            Err(MachineParseError::Syntax { line: 1, .. })
        ));
    }

    #[test]
    fn step_increments_and_advances() {
        let m = machine("inc 1\nhalt");
        let next = m.step(&MinskyMachine::initial_config()).unwrap();
        assert_eq!(
            next,
            MinskyStep::Next(MinskyConfig { q: 2, c1: 1, c2: 0 })
        );
    }

    #[test]
    fn step_takes_zero_branch() {
        let m = machine("jz 1 1\nhalt");
        let next = m.step(&MinskyMachine::initial_config()).unwrap();
        assert_eq!(
            next,
            MinskyStep::Next(MinskyConfig { q: 1, c1: 0, c2: 0 })
        );
    }

    #[test]
    fn step_rejects_decrement_at_zero() {
        let m = machine("dec 1\nhalt");
        assert_eq!(
            m.step(&MinskyMachine::initial_config()),
            Err(MinskyError::DecrementAtZero { q: 1, counter: 1 })
        );
    }

    #[test]
    fn two_increments_halt_at_step_two() {
        let m = machine("inc 1\ninc 1\nhalt");
        let trace = m.run(10).unwrap();
        assert_eq!(trace.halted_at, Some(2));
        let qs: Vec<usize> = (0..=2).map(|t| trace.fq(t).unwrap()).collect();
        assert_eq!(qs, vec![1, 2, 3]);
        assert_eq!(trace.f1(2), Some(2));
        assert_eq!(trace.f2(2), Some(0));
    }

    #[test]
    fn looping_machine_never_halts() {
        let m = machine("jz 1 1\nhalt");
        let trace = m.run(5).unwrap();
        assert_eq!(trace.halted_at, None);
        assert_eq!(trace.configs.len(), 6);
        assert!(trace
            .configs
            .iter()
            .all(|c| *c == MinskyConfig { q: 1, c1: 0, c2: 0 }));
    }

    #[test]
    fn zero_budget_keeps_initial_config() {
        let m = machine("inc 2\nhalt");
        let trace = m.run(0).unwrap();
        assert_eq!(trace.configs, vec![MinskyConfig { q: 1, c1: 0, c2: 0 }]);
        assert_eq!(trace.halted_at, None);
    }

    #[test]
    fn immediate_halt_machine() {
        let m = machine("halt");
        let trace = m.run(0).unwrap();
        assert_eq!(trace.halted_at, Some(0));
        assert_eq!(trace.configs.len(), 1);
    }

    #[test]
    fn looping_machine_closed_form() {
        // f1(t) = f2(t) = 0 and fq(t) = 1 for every t.
        let m = machine("jz 1 1\nhalt");
        let trace = m.run(10_000).unwrap();
        assert_eq!(trace.halted_at, None);
        for t in 0..=10_000 {
            assert_eq!(trace.f1(t), Some(0));
            assert_eq!(trace.f2(t), Some(0));
            assert_eq!(trace.fq(t), Some(1));
        }
    }

    #[test]
    fn run_prefix_property() {
        let m = machine("inc 1\njz 2 1\nhalt"); // loops: inc, jump back, inc, ...
        let short = m.run(7).unwrap();
        let long = m.run(9).unwrap();
        assert_eq!(&long.configs[..short.configs.len()], &short.configs[..]);
    }

    #[test]
    fn halted_at_is_first_halt() {
        let m = machine("inc 1\ninc 1\nhalt");
        let trace = m.run(10).unwrap();
        let k = trace.halted_at.unwrap();
        assert_eq!(trace.fq(k), Some(m.n()));
        for t in 0..k {
            assert_ne!(trace.fq(t), Some(m.n()));
        }
    }

    #[test]
    fn machine_text_round_trips() {
        let m = machine("inc 1\njz 2 1\ndec 1\nhalt");
        assert_eq!(MinskyMachine::parse(&m.to_text()).unwrap(), m);
    }
}
