//! Parsing of grammar-file text into a validated [`Grammar`].
//!
//! Parsing runs in phases so that every problem in a file is reported in
//! one pass rather than stopping at the first: line splitting, duplicate
//! detection, item parsing and rule classification, then validation.

use std::collections::HashSet;

use crate::diagnostics::{codes, has_errors, Diagnostic};
use crate::grammar::{
    validate, Grammar, NameError, ParsedItem::*, Probability, ProbabilityError, Rule, RuleBody,
    Slot, SymbolName, TokenSpec, WeightedAlternative,
};

/// A rule line split into its label and raw comma-delimited items,
/// before any classification.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawRule {
    pub lhs: SymbolName,
    pub items: Vec<String>,
    pub source_line: usize,
}

/// One right-hand-side item after annotation parsing but before the
/// grammar-wide phrasal/lexical decision.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ParsedItem {
    /// A plain symbol; resolves to a rule reference or a terminal token
    /// once the full label set is known.
    Bare(SymbolName),
    /// `name.digits` annotations, one or more separated by `|`.
    Options(Vec<WeightedAlternative>),
    /// A terminal with `}`-delimited unit indices.
    Token(TokenSpec),
}

/// Parses a full grammar file.
///
/// Blank lines and lines whose first non-blank character is `!` are
/// skipped. Returns the grammar only if no error-severity diagnostic was
/// produced; otherwise returns everything collected.
pub fn parse_grammar(text: &str) -> Result<Grammar, Vec<Diagnostic>> {
    let mut diagnostics = Vec::new();
    let mut raw_rules = Vec::new();

    for (idx, line) in text.lines().enumerate() {
        let line_no = idx + 1;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('!') {
            continue;
        }
        match parse_rule_line(line, line_no) {
            Ok(raw) => raw_rules.push(raw),
            Err(errs) => diagnostics.extend(errs),
        }
    }

    if raw_rules.is_empty() && diagnostics.is_empty() {
        diagnostics.push(Diagnostic::error(
            codes::EMPTY_GRAMMAR,
            1,
            "grammar contains no rules",
        ));
    }

    let mut seen: HashSet<&str> = HashSet::new();
    for raw in &raw_rules {
        if !seen.insert(raw.lhs.as_str()) {
            diagnostics.push(Diagnostic::error(
                codes::DUPLICATE_RULE,
                raw.source_line,
                format!("rule `{}` is already defined", raw.lhs),
            ));
        }
    }

    if has_errors(&diagnostics) {
        return Err(diagnostics);
    }

    let rules = match classify_rules(&raw_rules) {
        Ok(rules) => rules,
        Err(errs) => {
            diagnostics.extend(errs);
            return Err(diagnostics);
        }
    };

    let grammar = Grammar::from_rules(rules);
    diagnostics.extend(validate(&grammar));
    if has_errors(&diagnostics) {
        return Err(diagnostics);
    }
    Ok(grammar)
}

/// Splits one rule line on `>` and `,`, trimming surrounding whitespace.
pub fn parse_rule_line(line: &str, line_no: usize) -> Result<RawRule, Vec<Diagnostic>> {
    let mut errors = Vec::new();

    let Some(split) = line.find('>') else {
        return Err(vec![Diagnostic::error(
            codes::MALFORMED_RULE,
            line_no,
            "missing `>` between rule name and right-hand side",
        )]);
    };
    let (lhs_raw, rhs_raw) = (&line[..split], &line[split + 1..]);
    if rhs_raw.contains('>') {
        return Err(vec![Diagnostic::error(
            codes::MALFORMED_RULE,
            line_no,
            "more than one `>` in rule",
        )]);
    }

    let lhs = match SymbolName::new(lhs_raw.trim()) {
        Ok(name) => Some(name),
        Err(NameError::Empty) => {
            errors.push(Diagnostic::error(
                codes::EMPTY_SYMBOL,
                line_no,
                "rule name before `>` is empty",
            ));
            None
        }
        Err(NameError::InvalidChar(c)) => {
            errors.push(Diagnostic::error(
                codes::BAD_SYMBOL_NAME,
                line_no,
                format!("reserved character `{c}` in rule name `{}`", lhs_raw.trim()),
            ));
            None
        }
    };

    let mut items = Vec::new();
    for piece in rhs_raw.split(',') {
        let item = piece.trim();
        if item.is_empty() {
            errors.push(Diagnostic::error(
                codes::EMPTY_SYMBOL,
                line_no,
                "empty item on right-hand side",
            ));
        } else {
            items.push(item.to_string());
        }
    }

    match (lhs, errors.is_empty()) {
        (Some(lhs), true) => Ok(RawRule { lhs, items, source_line: line_no }),
        _ => Err(errors),
    }
}

/// Parses one comma-delimited item: unit-annotated token, option list, or
/// bare symbol.
pub fn parse_slot(item: &str, line_no: usize) -> Result<ParsedItem, Vec<Diagnostic>> {
    if item.contains('}') {
        return parse_unit_token(item, line_no).map(Token);
    }
    if item.contains('|') || item.contains('.') {
        return parse_option_list(item, line_no).map(Options);
    }
    match SymbolName::new(item) {
        Ok(name) => Ok(Bare(name)),
        Err(NameError::Empty) => Err(vec![Diagnostic::error(
            codes::EMPTY_SYMBOL,
            line_no,
            "empty item on right-hand side",
        )]),
        Err(NameError::InvalidChar(c)) => Err(vec![Diagnostic::error(
            codes::BAD_SYMBOL_NAME,
            line_no,
            format!("reserved character `{c}` in symbol `{item}`"),
        )]),
    }
}

fn parse_unit_token(item: &str, line_no: usize) -> Result<TokenSpec, Vec<Diagnostic>> {
    let mut errors = Vec::new();
    let split = item.find('}').expect("caller checked for `}`");
    let (surface_raw, units_raw) = (&item[..split], &item[split + 1..]);

    let surface = match SymbolName::new(surface_raw) {
        Ok(name) => Some(name),
        Err(NameError::Empty) => {
            errors.push(Diagnostic::error(
                codes::EMPTY_SYMBOL,
                line_no,
                format!("token surface before `}}` is empty in `{item}`"),
            ));
            None
        }
        Err(NameError::InvalidChar(c)) => {
            errors.push(Diagnostic::error(
                codes::BAD_SYMBOL_NAME,
                line_no,
                format!("reserved character `{c}` in token surface `{surface_raw}`"),
            ));
            None
        }
    };

    let mut units = Vec::new();
    if units_raw.is_empty() {
        errors.push(Diagnostic::error(
            codes::BAD_UNIT,
            line_no,
            format!("no unit indices after `}}` in `{item}`"),
        ));
    } else {
        for part in units_raw.split('+') {
            if part.bytes().all(|b| b.is_ascii_digit()) && !part.is_empty() {
                match part.parse::<u32>() {
                    Ok(unit) => units.push(unit),
                    Err(_) => errors.push(Diagnostic::error(
                        codes::BAD_UNIT,
                        line_no,
                        format!("unit index `{part}` is out of range"),
                    )),
                }
            } else {
                errors.push(Diagnostic::error(
                    codes::BAD_UNIT,
                    line_no,
                    format!("unit index `{part}` is not a non-negative integer"),
                ));
            }
        }
    }

    match (surface, errors.is_empty()) {
        (Some(surface), true) => Ok(TokenSpec::new(surface, Some(units))),
        _ => Err(errors),
    }
}

fn parse_option_list(item: &str, line_no: usize) -> Result<Vec<WeightedAlternative>, Vec<Diagnostic>> {
    let mut errors = Vec::new();
    let mut alternatives = Vec::new();

    for part in item.split('|') {
        if part.is_empty() {
            errors.push(Diagnostic::error(
                codes::EMPTY_SYMBOL,
                line_no,
                format!("empty alternative in option list `{item}`"),
            ));
            continue;
        }
        let Some(dot) = part.find('.') else {
            errors.push(Diagnostic::error(
                codes::OPTION_MISSING_PROBABILITY,
                line_no,
                format!("option `{part}` has no `.` probability annotation"),
            ));
            continue;
        };
        let (name_raw, digits) = (&part[..dot], &part[dot + 1..]);

        let symbol = match SymbolName::new(name_raw) {
            Ok(name) => Some(name),
            Err(NameError::Empty) => {
                errors.push(Diagnostic::error(
                    codes::EMPTY_SYMBOL,
                    line_no,
                    format!("empty symbol before `.` in `{part}`"),
                ));
                None
            }
            Err(NameError::InvalidChar(c)) => {
                errors.push(Diagnostic::error(
                    codes::BAD_SYMBOL_NAME,
                    line_no,
                    format!("reserved character `{c}` in symbol `{name_raw}`"),
                ));
                None
            }
        };

        let probability = match Probability::from_digits(digits) {
            Ok(p) if p.is_zero() => {
                errors.push(Diagnostic::error(
                    codes::ZERO_PROBABILITY,
                    line_no,
                    format!("probability `.{digits}` is zero"),
                ));
                None
            }
            Ok(p) => Some(p),
            Err(ProbabilityError::Empty) => {
                errors.push(Diagnostic::error(
                    codes::EMPTY_PROBABILITY,
                    line_no,
                    format!("no digits after `.` in `{part}`"),
                ));
                None
            }
            Err(ProbabilityError::NonDigit(c)) => {
                errors.push(Diagnostic::error(
                    codes::BAD_PROBABILITY,
                    line_no,
                    format!("non-digit `{c}` in probability of `{part}`"),
                ));
                None
            }
            Err(ProbabilityError::TooManyDigits) => {
                errors.push(Diagnostic::error(
                    codes::BAD_PROBABILITY,
                    line_no,
                    format!("probability in `{part}` has too many digits"),
                ));
                None
            }
        };

        if let (Some(symbol), Some(probability)) = (symbol, probability) {
            alternatives.push(WeightedAlternative::new(symbol, probability));
        }
    }

    if errors.is_empty() {
        Ok(alternatives)
    } else {
        Err(errors)
    }
}

/// Decides phrasal vs lexical for every rule.
///
/// A symbol "names a rule" only when the whole item string equals some
/// left-hand side, so annotated and unit-bearing items never do. Rules
/// whose items all resolve become phrasal; rules where nothing resolves
/// become lexical. Annotations force a phrasal reading: a lone annotated
/// symbol without a rule is an `annotated-terminal`, and any alternative
/// or plain symbol without a rule in such a line is an `unknown-symbol`.
/// A rule mixing resolving and non-resolving items without annotations is
/// ambiguous and rejected as `mixed-rule`.
fn classify_rules(raw_rules: &[RawRule]) -> Result<Vec<Rule>, Vec<Diagnostic>> {
    let labels: HashSet<&str> = raw_rules.iter().map(|r| r.lhs.as_str()).collect();
    let mut errors = Vec::new();
    let mut rules = Vec::new();

    for raw in raw_rules {
        let mut parsed = Vec::new();
        let mut item_errors = false;
        for item in &raw.items {
            match parse_slot(item, raw.source_line) {
                Ok(p) => parsed.push(p),
                Err(errs) => {
                    errors.extend(errs);
                    item_errors = true;
                }
            }
        }
        if item_errors {
            continue;
        }

        let has_options = parsed.iter().any(|p| matches!(p, Options(_)));
        let has_unit_tokens = parsed.iter().any(|p| matches!(p, Token(_)));
        let has_rule_references = parsed
            .iter()
            .any(|p| matches!(p, Bare(name) if labels.contains(name.as_str())));
        let unresolved: Vec<&SymbolName> = parsed
            .iter()
            .filter_map(|p| match p {
                Bare(name) if !labels.contains(name.as_str()) => Some(name),
                _ => None,
            })
            .collect();

        let body = if has_options {
            let mut ok = true;
            if has_unit_tokens {
                errors.push(Diagnostic::error(
                    codes::MIXED_RULE,
                    raw.source_line,
                    format!(
                        "rule `{}` mixes rewrite options with unit-annotated tokens",
                        raw.lhs
                    ),
                ));
                ok = false;
            }
            for name in &unresolved {
                errors.push(Diagnostic::error(
                    codes::UNKNOWN_SYMBOL,
                    raw.source_line,
                    format!("`{name}` names no rule"),
                ));
                ok = false;
            }
            for p in &parsed {
                if let Options(alts) = p {
                    for alt in alts {
                        if !labels.contains(alt.symbol().as_str()) {
                            let (code, what) = if alts.len() == 1 {
                                (codes::ANNOTATED_TERMINAL, "probability annotation on")
                            } else {
                                (codes::UNKNOWN_SYMBOL, "option alternative")
                            };
                            errors.push(Diagnostic::error(
                                code,
                                raw.source_line,
                                format!("{what} `{}` but no rule defines it", alt.symbol()),
                            ));
                            ok = false;
                        }
                    }
                }
            }
            if !ok {
                continue;
            }
            RuleBody::Phrasal(
                parsed
                    .into_iter()
                    .map(|p| match p {
                        Bare(name) => Slot::bare(name),
                        Options(alts) => Slot::new(alts),
                        Token(_) => unreachable!("rejected above"),
                    })
                    .collect(),
            )
        } else if has_rule_references {
            if !unresolved.is_empty() || has_unit_tokens {
                let offending = unresolved
                    .iter()
                    .map(|n| format!("`{n}`"))
                    .chain(parsed.iter().filter_map(|p| match p {
                        Token(t) => Some(format!("`{}`", t.render())),
                        _ => None,
                    }))
                    .collect::<Vec<_>>()
                    .join(", ");
                errors.push(Diagnostic::error(
                    codes::MIXED_RULE,
                    raw.source_line,
                    format!(
                        "rule `{}` mixes rule references with terminal tokens ({offending} name no rule)",
                        raw.lhs
                    ),
                ));
                continue;
            }
            RuleBody::Phrasal(
                parsed
                    .into_iter()
                    .map(|p| match p {
                        Bare(name) => Slot::bare(name),
                        _ => unreachable!("only bare items in this branch"),
                    })
                    .collect(),
            )
        } else {
            RuleBody::Lexical(
                parsed
                    .into_iter()
                    .map(|p| match p {
                        Bare(name) => TokenSpec::new(name, None),
                        Token(t) => t,
                        Options(_) => unreachable!("no options in this branch"),
                    })
                    .collect(),
            )
        };

        rules.push(Rule::new(raw.lhs.clone(), body, raw.source_line));
    }

    if errors.is_empty() {
        Ok(rules)
    } else {
        Err(errors)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::diagnostics::Severity;

    fn codes_of(diags: &[Diagnostic]) -> Vec<(&'static str, usize)> {
        diags.iter().map(|d| (d.code, d.source_line)).collect()
    }

    #[test]
    fn parses_the_basic_three_rule_grammar() {
        let g = parse_grammar("! c\nS>NP,VP\nNP>dog,cat\nVP>eats,sleeps").unwrap();
        assert_eq!(g.rules().len(), 3);
        assert_eq!(g.start().as_str(), "S");
        let np = g.rule("NP").unwrap();
        match np.body() {
            RuleBody::Lexical(tokens) => {
                let surfaces: Vec<&str> = tokens.iter().map(TokenSpec::surface).collect();
                assert_eq!(surfaces, ["dog", "cat"]);
            }
            RuleBody::Phrasal(_) => panic!("NP should be lexical"),
        }
        assert!(!g.rule("S").unwrap().is_lexical());
        assert_eq!(g.rule("NP").unwrap().source_line(), 3);
    }

    #[test]
    fn single_rule_with_unknown_item_is_lexical() {
        let g = parse_grammar("S>a").unwrap();
        assert_eq!(g.rules().len(), 1);
        match g.rules()[0].body() {
            RuleBody::Lexical(tokens) => assert_eq!(tokens[0].surface(), "a"),
            RuleBody::Phrasal(_) => panic!("degenerate rule should be lexical"),
        }
    }

    #[test]
    fn duplicate_rule_reports_the_second_line() {
        let errs = parse_grammar("S>NP,VP\nS>x").unwrap_err();
        assert!(codes_of(&errs).contains(&(codes::DUPLICATE_RULE, 2)));
    }

    #[test]
    fn empty_grammar_is_an_error() {
        let errs = parse_grammar("! only a comment\n\n").unwrap_err();
        assert_eq!(errs[0].code, codes::EMPTY_GRAMMAR);
    }

    #[test]
    fn rule_line_splits_label_and_items() {
        let raw = parse_rule_line("S>NP,PP.3,VP", 1).unwrap();
        assert_eq!(raw.lhs.as_str(), "S");
        assert_eq!(raw.items, ["NP", "PP.3", "VP"]);
    }

    #[test]
    fn option_string_stays_one_item() {
        let raw =
            parse_rule_line("S>declarative_s.3|interrogative_s.5|imperative_s.2", 1).unwrap();
        assert_eq!(raw.lhs.as_str(), "S");
        assert_eq!(raw.items, ["declarative_s.3|interrogative_s.5|imperative_s.2"]);
    }

    #[test]
    fn missing_separator_is_malformed() {
        let errs = parse_rule_line("SNP,VP", 4).unwrap_err();
        assert_eq!(codes_of(&errs), [(codes::MALFORMED_RULE, 4)]);
    }

    #[test]
    fn second_separator_is_malformed() {
        let errs = parse_rule_line("S>NP>VP", 2).unwrap_err();
        assert_eq!(codes_of(&errs), [(codes::MALFORMED_RULE, 2)]);
    }

    #[test]
    fn whitespace_around_label_and_items_is_trimmed() {
        let raw = parse_rule_line("  S > NP , VP ", 1).unwrap();
        assert_eq!(raw.lhs.as_str(), "S");
        assert_eq!(raw.items, ["NP", "VP"]);
    }

    #[test]
    fn empty_items_are_rejected() {
        let errs = parse_rule_line("S>NP,,VP", 1).unwrap_err();
        assert_eq!(codes_of(&errs), [(codes::EMPTY_SYMBOL, 1)]);
        let errs = parse_rule_line(">NP", 1).unwrap_err();
        assert_eq!(codes_of(&errs), [(codes::EMPTY_SYMBOL, 1)]);
    }

    #[test]
    fn slot_with_single_annotation_keeps_epsilon() {
        match parse_slot("PP.3", 1).unwrap() {
            Options(alts) => {
                assert_eq!(alts.len(), 1);
                assert_eq!(alts[0].symbol().as_str(), "PP");
                assert_eq!(alts[0].probability(), Probability::from_digits("3").unwrap());
                let slot = Slot::new(alts);
                assert_eq!(slot.epsilon_mass().as_f64(), 0.7);
            }
            other => panic!("expected options, got {other:?}"),
        }
    }

    #[test]
    fn slot_with_two_options_has_no_epsilon() {
        match parse_slot("VP_int.3|VP_trans.7", 1).unwrap() {
            Options(alts) => {
                assert_eq!(alts.len(), 2);
                assert_eq!(alts[0].symbol().as_str(), "VP_int");
                assert_eq!(alts[1].symbol().as_str(), "VP_trans");
                assert!(Slot::new(alts).epsilon_mass().is_zero());
            }
            other => panic!("expected options, got {other:?}"),
        }
    }

    #[test]
    fn unit_token_splits_on_brace_and_plus() {
        match parse_slot("dog}2+5", 1).unwrap() {
            Token(t) => {
                assert_eq!(t.surface(), "dog");
                assert_eq!(t.units(), Some(&[2, 5][..]));
            }
            other => panic!("expected token, got {other:?}"),
        }
    }

    #[test]
    fn bare_symbol_stays_unresolved() {
        assert_eq!(
            parse_slot("NP", 1).unwrap(),
            Bare(SymbolName::new("NP").unwrap())
        );
    }

    #[test]
    fn option_errors_are_specific() {
        let errs = parse_slot("A|B.3", 1).unwrap_err();
        assert_eq!(codes_of(&errs), [(codes::OPTION_MISSING_PROBABILITY, 1)]);

        let errs = parse_slot("A.", 1).unwrap_err();
        assert_eq!(codes_of(&errs), [(codes::EMPTY_PROBABILITY, 1)]);

        let errs = parse_slot("A.0|B.00", 1).unwrap_err();
        assert_eq!(
            codes_of(&errs),
            [(codes::ZERO_PROBABILITY, 1), (codes::ZERO_PROBABILITY, 1)]
        );

        let errs = parse_slot("A.3x", 1).unwrap_err();
        assert_eq!(codes_of(&errs), [(codes::BAD_PROBABILITY, 1)]);
    }

    #[test]
    fn bad_units_are_rejected() {
        assert!(parse_slot("dog}", 1).is_err());
        assert!(parse_slot("dog}2++5", 1).is_err());
        assert!(parse_slot("dog}x", 1).is_err());
        assert!(parse_slot("dog}2+-1", 1).is_err());
    }

    #[test]
    fn lexical_and_phrasal_classification_follows_the_label_set() {
        let g = parse_grammar("S>NP,PP.3,VP\nNP>dog,cat\nPP>P,NP\nP>on,with\nVP>sleeps,drinks")
            .unwrap();
        assert!(!g.rule("PP").unwrap().is_lexical());
        assert!(g.rule("NP").unwrap().is_lexical());
        assert!(g.rule("P").unwrap().is_lexical());
    }

    #[test]
    fn mixing_rule_references_and_tokens_is_rejected() {
        let errs = parse_grammar("S>NP,eats\nNP>dog").unwrap_err();
        assert!(codes_of(&errs).contains(&(codes::MIXED_RULE, 1)));
    }

    #[test]
    fn annotated_symbol_without_rule_is_rejected() {
        let errs = parse_grammar("S>PP.3").unwrap_err();
        assert!(codes_of(&errs).contains(&(codes::ANNOTATED_TERMINAL, 1)));
    }

    #[test]
    fn option_alternative_without_rule_is_rejected() {
        let errs = parse_grammar("S>A.3|B.7\nA>x").unwrap_err();
        assert!(codes_of(&errs).contains(&(codes::UNKNOWN_SYMBOL, 1)));
    }

    #[test]
    fn bare_symbol_without_rule_next_to_options_is_unknown() {
        // The uncorrected second sample grammar: `PP,33` instead of `PP.33`.
        let text = "S>NP,PP,33,V_intransitive.3|V_transitive.7\n\
                    NP>cat,dog\nPP>P,NP\nP>on,with\n\
                    V_intransitive>sleeps,swims\nV_transitive>V_trans,NP\nV_trans>kicks,eats";
        let errs = parse_grammar(text).unwrap_err();
        let hit = errs
            .iter()
            .find(|d| d.code == codes::UNKNOWN_SYMBOL)
            .expect("expected unknown-symbol");
        assert_eq!(hit.source_line, 1);
        assert!(hit.message.contains("`33`"));
    }

    #[test]
    fn start_symbol_in_a_right_hand_side_resolves() {
        // A reference to the first rule is still a rule reference.
        let g = parse_grammar("S>NP\nNP>S").unwrap();
        assert!(!g.rule("NP").unwrap().is_lexical());
    }

    #[test]
    fn crlf_line_endings_are_accepted() {
        let g = parse_grammar("S>NP,VP\r\nNP>dog,cat\r\nVP>eats,sleeps\r\n").unwrap();
        assert_eq!(g.rules().len(), 3);
        assert!(g.rule("NP").unwrap().is_lexical());
    }

    #[test]
    fn canonical_form_is_a_fixed_point() {
        let text = "S>NP,VP\nNP>dog,cat\nVP>eats,sleeps";
        let g = parse_grammar(text).unwrap();
        assert_eq!(g.canonical_form(), text);
    }

    #[test]
    fn canonical_form_preserves_digit_counts_and_units() {
        let text = "S>NP,PP.33\nNP>dog}2+5,cat}1\nPP>NP.05";
        let g = parse_grammar(text).unwrap();
        assert_eq!(g.canonical_form(), text);
        let again = parse_grammar(&g.canonical_form()).unwrap();
        assert!(g.same_shape(&again));
    }

    #[test]
    fn comments_and_blank_lines_are_transparent() {
        let plain = parse_grammar("S>NP,VP\nNP>dog,cat\nVP>eats,sleeps").unwrap();
        let noisy =
            parse_grammar("! header\n\nS>NP,VP\n!x\nNP>dog,cat\n\n\nVP>eats,sleeps\n! end")
                .unwrap();
        assert!(plain.same_shape(&noisy));
    }

    #[test]
    fn all_parse_errors_are_collected_not_just_the_first() {
        let errs = parse_grammar("S>\nX>a,\nSNP").unwrap_err();
        assert!(errs.len() >= 3);
        assert!(errs.iter().all(|d| d.severity == Severity::Error));
    }
}
