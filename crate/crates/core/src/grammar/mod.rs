//! The grammar model: rewrite rules parsed from `.grm` text.
//!
//! A grammar file is line oriented. Lines starting with `!` are comments,
//! blank lines are skipped, and every other line is a rule of the form
//! `LHS>item,item,...`. The first rule's left-hand side is the start
//! symbol. A symbol with no rule of its own is a terminal token; a rule
//! whose items are all terminals is *lexical* (one token is printed,
//! chosen uniformly) while a rule whose items all reference other rules
//! is *phrasal* (items expand left to right).
//!
//! Rewrite probabilities are written with a period (`PP.3` expands `PP`
//! with probability 3/10 and prints nothing otherwise), and alternatives
//! within one comma-delimited slot are separated by `|`
//! (`VP_int.3|VP_trans.7`). Terminal tokens may carry localist unit
//! indices after `}`, as in `dog}2+5`.

mod parser;
mod validate;

pub use parser::{parse_grammar, parse_rule_line, parse_slot, ParsedItem, RawRule};
pub use validate::validate;

use std::collections::HashMap;
use std::fmt;

/// Characters that cannot appear inside a symbol name or token surface.
pub const RESERVED_CHARS: &[char] = &['>', ',', '.', '|', '}', '+', '!'];

fn find_invalid_char(s: &str) -> Option<char> {
    s.chars().find(|c| RESERVED_CHARS.contains(c) || c.is_whitespace())
}

/// The name of a rule or the surface form of a token.
///
/// Non-empty, with no reserved characters and no whitespace.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SymbolName(String);

/// Why a candidate symbol name was rejected.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum NameError {
    Empty,
    InvalidChar(char),
}

impl SymbolName {
    pub fn new(name: &str) -> Result<Self, NameError> {
        if name.is_empty() {
            return Err(NameError::Empty);
        }
        match find_invalid_char(name) {
            Some(c) => Err(NameError::InvalidChar(c)),
            None => Ok(SymbolName(name.to_string())),
        }
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for SymbolName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl AsRef<str> for SymbolName {
    fn as_ref(&self) -> &str {
        &self.0
    }
}

/// A terminal token: its printed surface plus optional localist unit indices.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct TokenSpec {
    surface: SymbolName,
    units: Option<Vec<u32>>,
}

impl TokenSpec {
    pub fn new(surface: SymbolName, units: Option<Vec<u32>>) -> Self {
        if let Some(u) = &units {
            debug_assert!(!u.is_empty(), "unit list must be non-empty when present");
        }
        TokenSpec { surface, units }
    }

    pub fn surface(&self) -> &str {
        self.surface.as_str()
    }

    pub fn units(&self) -> Option<&[u32]> {
        self.units.as_deref()
    }

    /// Renders the token back to grammar-file syntax (`dog` or `dog}2+5`).
    pub fn render(&self) -> String {
        match &self.units {
            None => self.surface.to_string(),
            Some(units) => {
                let joined = units
                    .iter()
                    .map(u32::to_string)
                    .collect::<Vec<_>>()
                    .join("+");
                format!("{}}}{}", self.surface, joined)
            }
        }
    }
}

/// An exact rational with a power-of-ten denominator: `numerator / 10^digits`.
///
/// `digits` is the number of digit characters written after the period in
/// the source, so `.3` and `.30` are kept distinct and re-render exactly.
/// Floating point enters only at sampling time via [`Probability::as_f64`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Probability {
    numerator: u64,
    digits: u8,
}

/// Why a probability digit string was rejected.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ProbabilityError {
    Empty,
    NonDigit(char),
    TooManyDigits,
}

/// Longest accepted digit string; keeps all slot arithmetic inside u64/u128.
const MAX_PROBABILITY_DIGITS: usize = 18;

const POW10: [u64; 19] = {
    let mut t = [1u64; 19];
    let mut i = 1;
    while i < 19 {
        t[i] = t[i - 1] * 10;
        i += 1;
    }
    t
};

impl Probability {
    /// Exactly 1 (a bare, unannotated symbol).
    pub const ONE: Probability = Probability { numerator: 1, digits: 0 };

    /// Exactly 0 (the epsilon mass of a slot whose probabilities sum to 1 or more).
    pub const ZERO: Probability = Probability { numerator: 0, digits: 0 };

    /// Parses the digit string written after a period: `"3"` is 3/10,
    /// `"33"` is 33/100, `"05"` is 5/100.
    pub fn from_digits(digits: &str) -> Result<Self, ProbabilityError> {
        if digits.is_empty() {
            return Err(ProbabilityError::Empty);
        }
        if let Some(c) = digits.chars().find(|c| !c.is_ascii_digit()) {
            return Err(ProbabilityError::NonDigit(c));
        }
        if digits.len() > MAX_PROBABILITY_DIGITS {
            return Err(ProbabilityError::TooManyDigits);
        }
        let numerator: u64 = digits.parse().expect("all-digit string of bounded length");
        Ok(Probability {
            numerator,
            digits: digits.len() as u8,
        })
    }

    pub(crate) fn from_parts(numerator: u64, digits: u8) -> Self {
        debug_assert!(digits as usize <= MAX_PROBABILITY_DIGITS);
        debug_assert!(numerator <= POW10[digits as usize]);
        Probability { numerator, digits }
    }

    pub fn numerator(&self) -> u64 {
        self.numerator
    }

    /// Number of digits written after the period in the source.
    pub fn digits(&self) -> u8 {
        self.digits
    }

    pub fn is_zero(&self) -> bool {
        self.numerator == 0
    }

    pub fn is_one(&self) -> bool {
        self.numerator == POW10[self.digits as usize]
    }

    /// The value as a double, for sampling.
    pub fn as_f64(&self) -> f64 {
        self.numerator as f64 / POW10[self.digits as usize] as f64
    }

    /// Numerator after rescaling to denominator 10^target_digits.
    fn scaled(&self, target_digits: u8) -> u128 {
        debug_assert!(target_digits >= self.digits);
        self.numerator as u128 * POW10[(target_digits - self.digits) as usize] as u128
    }

    /// Renders annotation syntax: `.3`, `.33`, `.05` (leading zeros kept).
    pub fn render(&self) -> String {
        format!(".{:0>width$}", self.numerator, width = self.digits as usize)
    }
}

/// One weighted alternative inside a slot.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WeightedAlternative {
    symbol: SymbolName,
    probability: Probability,
}

impl WeightedAlternative {
    pub fn new(symbol: SymbolName, probability: Probability) -> Self {
        WeightedAlternative { symbol, probability }
    }

    pub fn symbol(&self) -> &SymbolName {
        &self.symbol
    }

    pub fn probability(&self) -> Probability {
        self.probability
    }
}

/// One comma-delimited element of a phrasal rule: an ordered list of
/// weighted alternatives plus the leftover epsilon mass.
///
/// Selection is cumulative and order sensitive, so when the probabilities
/// sum past 1 the trailing alternatives are partly or wholly unreachable.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Slot {
    alternatives: Vec<WeightedAlternative>,
    epsilon_mass: Probability,
}

impl Slot {
    pub fn new(alternatives: Vec<WeightedAlternative>) -> Self {
        debug_assert!(!alternatives.is_empty());
        let epsilon_mass = Slot::epsilon_of(&alternatives);
        Slot { alternatives, epsilon_mass }
    }

    /// A slot holding a single bare symbol: probability 1, no epsilon.
    pub fn bare(symbol: SymbolName) -> Self {
        Slot::new(vec![WeightedAlternative::new(symbol, Probability::ONE)])
    }

    fn epsilon_of(alternatives: &[WeightedAlternative]) -> Probability {
        let digits = alternatives
            .iter()
            .map(|a| a.probability.digits())
            .max()
            .unwrap_or(0);
        let total: u128 = alternatives
            .iter()
            .map(|a| a.probability.scaled(digits))
            .sum();
        let denominator = POW10[digits as usize] as u128;
        if total >= denominator {
            Probability::ZERO
        } else {
            Probability::from_parts((denominator - total) as u64, digits)
        }
    }

    pub fn alternatives(&self) -> &[WeightedAlternative] {
        &self.alternatives
    }

    /// The probability that this slot prints nothing: `max(0, 1 - sum)`.
    pub fn epsilon_mass(&self) -> Probability {
        self.epsilon_mass
    }

    /// True for a single unannotated symbol. Bare slots always expand and
    /// consume no random draw.
    pub fn is_bare(&self) -> bool {
        self.alternatives.len() == 1 && self.alternatives[0].probability.is_one()
    }

    /// Exact check for a probability sum above 1.
    pub fn probability_sum_exceeds_one(&self) -> bool {
        let digits = self
            .alternatives
            .iter()
            .map(|a| a.probability.digits())
            .max()
            .unwrap_or(0);
        let total: u128 = self
            .alternatives
            .iter()
            .map(|a| a.probability.scaled(digits))
            .sum();
        total > POW10[digits as usize] as u128
    }

    /// Exact check for a probability sum of at least 1 (the slot never
    /// resolves to epsilon).
    pub fn covers_unit_mass(&self) -> bool {
        self.epsilon_mass.is_zero()
    }

    fn render(&self) -> String {
        if self.is_bare() {
            return self.alternatives[0].symbol.to_string();
        }
        self.alternatives
            .iter()
            .map(|a| format!("{}{}", a.symbol, a.probability.render()))
            .collect::<Vec<_>>()
            .join("|")
    }
}

/// The body of a rule: either slots referencing other rules, or tokens.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RuleBody {
    Phrasal(Vec<Slot>),
    Lexical(Vec<TokenSpec>),
}

/// One rewrite rule.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Rule {
    lhs: SymbolName,
    body: RuleBody,
    source_line: usize,
}

impl Rule {
    pub(crate) fn new(lhs: SymbolName, body: RuleBody, source_line: usize) -> Self {
        Rule { lhs, body, source_line }
    }

    pub fn lhs(&self) -> &SymbolName {
        &self.lhs
    }

    pub fn body(&self) -> &RuleBody {
        &self.body
    }

    pub fn is_lexical(&self) -> bool {
        matches!(self.body, RuleBody::Lexical(_))
    }

    /// 1-based line number of the rule in its source text.
    pub fn source_line(&self) -> usize {
        self.source_line
    }

    /// True when the bodies match, ignoring source line numbers.
    pub fn same_shape(&self, other: &Rule) -> bool {
        self.lhs == other.lhs && self.body == other.body
    }

    fn render(&self) -> String {
        let items: Vec<String> = match &self.body {
            RuleBody::Phrasal(slots) => slots.iter().map(Slot::render).collect(),
            RuleBody::Lexical(tokens) => tokens.iter().map(TokenSpec::render).collect(),
        };
        format!("{}>{}", self.lhs, items.join(","))
    }

    /// Item list in grammar-file syntax, comma-separated (used by the
    /// rule-table dump).
    pub fn rendered_items(&self) -> Vec<String> {
        match &self.body {
            RuleBody::Phrasal(slots) => slots.iter().map(Slot::render).collect(),
            RuleBody::Lexical(tokens) => tokens.iter().map(TokenSpec::render).collect(),
        }
    }
}

/// A parsed grammar: ordered rules with distinct left-hand sides.
///
/// The start symbol is the first rule's left-hand side. Grammars are
/// immutable after construction and safe to share across threads.
#[derive(Debug, Clone)]
pub struct Grammar {
    rules: Vec<Rule>,
    by_name: HashMap<String, usize>,
}

impl Grammar {
    pub(crate) fn from_rules(rules: Vec<Rule>) -> Self {
        debug_assert!(!rules.is_empty());
        let by_name = rules
            .iter()
            .enumerate()
            .map(|(i, r)| (r.lhs.as_str().to_string(), i))
            .collect();
        Grammar { rules, by_name }
    }

    pub fn rules(&self) -> &[Rule] {
        &self.rules
    }

    /// The sentence node: the first rule's left-hand side.
    pub fn start(&self) -> &SymbolName {
        self.rules[0].lhs()
    }

    pub fn rule_index(&self, name: &str) -> Option<usize> {
        self.by_name.get(name).copied()
    }

    pub fn rule(&self, name: &str) -> Option<&Rule> {
        self.rule_index(name).map(|i| &self.rules[i])
    }

    /// True when every lexical token carries unit indices. Vacuously true
    /// for grammars with no lexical rules.
    pub fn has_units(&self) -> bool {
        self.lexical_tokens().all(|t| t.units().is_some())
    }

    pub(crate) fn lexical_tokens(&self) -> impl Iterator<Item = &TokenSpec> {
        self.rules.iter().filter_map(|r| match &r.body {
            RuleBody::Lexical(tokens) => Some(tokens.iter()),
            RuleBody::Phrasal(_) => None,
        })
        .flatten()
    }

    /// Serializes back to grammar-file text: one rule per line, with
    /// probabilities re-rendered at their original digit count. Parsing
    /// the result yields a structurally identical grammar.
    pub fn canonical_form(&self) -> String {
        self.rules
            .iter()
            .map(Rule::render)
            .collect::<Vec<_>>()
            .join("\n")
    }

    /// Structural equality, ignoring source line numbers.
    pub fn same_shape(&self, other: &Grammar) -> bool {
        self.rules.len() == other.rules.len()
            && self
                .rules
                .iter()
                .zip(other.rules.iter())
                .all(|(a, b)| a.same_shape(b))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn symbol_name_rejects_reserved_characters() {
        for bad in [">", "a,b", "a.b", "a|b", "a}b", "a+b", "a!b", "a b", "a\tb", ""] {
            assert!(SymbolName::new(bad).is_err(), "{bad:?} should be rejected");
        }
        for good in ["S", "NP", "VP_int", "dog-house", "N0", "33"] {
            assert!(SymbolName::new(good).is_ok(), "{good:?} should be accepted");
        }
    }

    #[test]
    fn probability_from_digits_is_exact() {
        let p = Probability::from_digits("3").unwrap();
        assert_eq!((p.numerator(), p.digits()), (3, 1));
        let p = Probability::from_digits("33").unwrap();
        assert_eq!((p.numerator(), p.digits()), (33, 2));
        let p = Probability::from_digits("05").unwrap();
        assert_eq!((p.numerator(), p.digits()), (5, 2));
        assert_eq!(p.render(), ".05");
    }

    #[test]
    fn probability_rejects_bad_digit_strings() {
        assert_eq!(Probability::from_digits(""), Err(ProbabilityError::Empty));
        assert_eq!(
            Probability::from_digits("3x"),
            Err(ProbabilityError::NonDigit('x'))
        );
        assert_eq!(
            Probability::from_digits("1234567890123456789"),
            Err(ProbabilityError::TooManyDigits)
        );
    }

    #[test]
    fn slot_epsilon_mass_is_the_exact_remainder() {
        let slot = Slot::new(vec![WeightedAlternative::new(
            SymbolName::new("PP").unwrap(),
            Probability::from_digits("3").unwrap(),
        )]);
        assert_eq!(slot.epsilon_mass(), Probability::from_parts(7, 1));

        let slot = Slot::new(vec![
            WeightedAlternative::new(
                SymbolName::new("A").unwrap(),
                Probability::from_digits("3").unwrap(),
            ),
            WeightedAlternative::new(
                SymbolName::new("B").unwrap(),
                Probability::from_digits("7").unwrap(),
            ),
        ]);
        assert!(slot.epsilon_mass().is_zero());
        assert!(!slot.probability_sum_exceeds_one());

        let slot = Slot::new(vec![
            WeightedAlternative::new(
                SymbolName::new("A").unwrap(),
                Probability::from_digits("6").unwrap(),
            ),
            WeightedAlternative::new(
                SymbolName::new("B").unwrap(),
                Probability::from_digits("7").unwrap(),
            ),
        ]);
        assert!(slot.epsilon_mass().is_zero());
        assert!(slot.probability_sum_exceeds_one());
    }

    #[test]
    fn mixed_digit_counts_use_a_common_denominator() {
        // .3 + .33 = 63/100, epsilon 37/100
        let slot = Slot::new(vec![
            WeightedAlternative::new(
                SymbolName::new("A").unwrap(),
                Probability::from_digits("3").unwrap(),
            ),
            WeightedAlternative::new(
                SymbolName::new("B").unwrap(),
                Probability::from_digits("33").unwrap(),
            ),
        ]);
        assert_eq!(slot.epsilon_mass(), Probability::from_parts(37, 2));
    }

    #[test]
    fn bare_slot_has_probability_one_and_no_epsilon() {
        let slot = Slot::bare(SymbolName::new("NP").unwrap());
        assert!(slot.is_bare());
        assert!(slot.epsilon_mass().is_zero());
        assert!(slot.covers_unit_mass());
    }

    #[test]
    fn token_render_reverses_unit_syntax() {
        let t = TokenSpec::new(SymbolName::new("dog").unwrap(), Some(vec![2, 5]));
        assert_eq!(t.render(), "dog}2+5");
        let t = TokenSpec::new(SymbolName::new("dog").unwrap(), None);
        assert_eq!(t.render(), "dog");
    }
}
