//! Structural checks on a classified grammar.

use std::collections::VecDeque;

use crate::diagnostics::{codes, Diagnostic};
use crate::grammar::{Grammar, RuleBody};

/// Limits of the classic C interpreter, kept as warnings so grammars stay
/// loadable there.
const ORIGINAL_MAX_RULES: usize = 255;
const ORIGINAL_MAX_ITEMS: usize = 50;
const ORIGINAL_MAX_OPTIONS: usize = 10;
const ORIGINAL_MAX_LABEL: usize = 255;

/// Runs every check and returns the collected diagnostics.
///
/// Warnings flag hazards (probability sums above 1, unreachable rules,
/// cycles that recurse with certainty, inputs past the classic
/// interpreter's limits); the only error here is a grammar where some but
/// not all tokens carry unit indices.
pub fn validate(grammar: &Grammar) -> Vec<Diagnostic> {
    let mut diagnostics = Vec::new();
    check_probability_sums(grammar, &mut diagnostics);
    check_reachability(grammar, &mut diagnostics);
    check_certain_recursion(grammar, &mut diagnostics);
    check_unit_consistency(grammar, &mut diagnostics);
    check_original_limits(grammar, &mut diagnostics);
    diagnostics
}

fn check_probability_sums(grammar: &Grammar, diagnostics: &mut Vec<Diagnostic>) {
    for rule in grammar.rules() {
        let RuleBody::Phrasal(slots) = rule.body() else { continue };
        for (i, slot) in slots.iter().enumerate() {
            if slot.probability_sum_exceeds_one() {
                diagnostics.push(Diagnostic::warning(
                    codes::PROB_SUM_EXCEEDS_ONE,
                    rule.source_line(),
                    format!(
                        "probabilities in item {} of `{}` sum past 1; \
                         trailing alternatives are partly or wholly unreachable",
                        i + 1,
                        rule.lhs()
                    ),
                ));
            }
        }
    }
}

/// Rule indices referenced by a rule's slots, one entry per alternative.
fn successors(grammar: &Grammar, rule_index: usize) -> Vec<usize> {
    match grammar.rules()[rule_index].body() {
        RuleBody::Lexical(_) => Vec::new(),
        RuleBody::Phrasal(slots) => slots
            .iter()
            .flat_map(|slot| slot.alternatives())
            .map(|alt| {
                grammar
                    .rule_index(alt.symbol().as_str())
                    .expect("phrasal references resolve at classification")
            })
            .collect(),
    }
}

pub(crate) fn reachable_from_start(grammar: &Grammar) -> Vec<bool> {
    let mut reached = vec![false; grammar.rules().len()];
    let mut queue = VecDeque::from([0usize]);
    reached[0] = true;
    while let Some(i) = queue.pop_front() {
        for next in successors(grammar, i) {
            if !reached[next] {
                reached[next] = true;
                queue.push_back(next);
            }
        }
    }
    reached
}

fn check_reachability(grammar: &Grammar, diagnostics: &mut Vec<Diagnostic>) {
    let reached = reachable_from_start(grammar);
    for (rule, reached) in grammar.rules().iter().zip(reached) {
        if !reached {
            diagnostics.push(Diagnostic::warning(
                codes::UNREACHABLE_RULE,
                rule.source_line(),
                format!("rule `{}` is not reachable from `{}`", rule.lhs(), grammar.start()),
            ));
        }
    }
}

/// Warns on cycles in which every step expands with probability 1 (bare
/// slots), since such a cycle can never terminate.
fn check_certain_recursion(grammar: &Grammar, diagnostics: &mut Vec<Diagnostic>) {
    let n = grammar.rules().len();
    let mut certain_edges: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (i, rule) in grammar.rules().iter().enumerate() {
        let RuleBody::Phrasal(slots) = rule.body() else { continue };
        for slot in slots {
            if slot.is_bare() {
                let target = grammar
                    .rule_index(slot.alternatives()[0].symbol().as_str())
                    .expect("phrasal references resolve at classification");
                certain_edges[i].push(target);
            }
        }
    }

    for component in strongly_connected_components(&certain_edges) {
        let cyclic = component.len() > 1
            || certain_edges[component[0]].contains(&component[0]);
        if !cyclic {
            continue;
        }
        let members = component
            .iter()
            .map(|&i| format!("`{}`", grammar.rules()[i].lhs()))
            .collect::<Vec<_>>()
            .join(" -> ");
        let first_line = component
            .iter()
            .map(|&i| grammar.rules()[i].source_line())
            .min()
            .expect("component is non-empty");
        diagnostics.push(Diagnostic::warning(
            codes::POSSIBLE_UNBOUNDED_RECURSION,
            first_line,
            format!("{members} form a cycle in which every step has probability 1"),
        ));
    }
}

/// Kosaraju's algorithm with explicit stacks; components come out sorted
/// by their smallest rule index.
fn strongly_connected_components(edges: &[Vec<usize>]) -> Vec<Vec<usize>> {
    let n = edges.len();
    let mut reversed: Vec<Vec<usize>> = vec![Vec::new(); n];
    for (from, targets) in edges.iter().enumerate() {
        for &to in targets {
            reversed[to].push(from);
        }
    }

    let mut order = Vec::with_capacity(n);
    let mut visited = vec![false; n];
    for start in 0..n {
        if visited[start] {
            continue;
        }
        let mut stack = vec![(start, 0usize)];
        visited[start] = true;
        while let Some(&(node, next)) = stack.last() {
            if next < edges[node].len() {
                stack.last_mut().expect("stack is non-empty").1 += 1;
                let child = edges[node][next];
                if !visited[child] {
                    visited[child] = true;
                    stack.push((child, 0));
                }
            } else {
                order.push(node);
                stack.pop();
            }
        }
    }

    let mut component_of = vec![usize::MAX; n];
    let mut components = Vec::new();
    for &start in order.iter().rev() {
        if component_of[start] != usize::MAX {
            continue;
        }
        let id = components.len();
        let mut member_stack = vec![start];
        component_of[start] = id;
        let mut members = Vec::new();
        while let Some(node) = member_stack.pop() {
            members.push(node);
            for &prev in &reversed[node] {
                if component_of[prev] == usize::MAX {
                    component_of[prev] = id;
                    member_stack.push(prev);
                }
            }
        }
        members.sort_unstable();
        components.push(members);
    }
    components.sort_by_key(|c| c[0]);
    components
}

fn check_unit_consistency(grammar: &Grammar, diagnostics: &mut Vec<Diagnostic>) {
    let mut with_units = 0usize;
    let mut without_units = 0usize;
    let mut first_odd_line = None;
    let mut first_has_units = None;
    for rule in grammar.rules() {
        let RuleBody::Lexical(tokens) = rule.body() else { continue };
        for token in tokens {
            let has = token.units().is_some();
            if has {
                with_units += 1;
            } else {
                without_units += 1;
            }
            match first_has_units {
                None => first_has_units = Some(has),
                Some(reference) if reference != has && first_odd_line.is_none() => {
                    first_odd_line = Some(rule.source_line());
                }
                _ => {}
            }
        }
    }
    if with_units > 0 && without_units > 0 {
        diagnostics.push(Diagnostic::error(
            codes::UNITS_INCONSISTENT,
            first_odd_line.unwrap_or(1),
            format!(
                "{with_units} lexical tokens carry `}}` unit indices but {without_units} do not; \
                 unit annotations are all-or-nothing"
            ),
        ));
    }
}

fn check_original_limits(grammar: &Grammar, diagnostics: &mut Vec<Diagnostic>) {
    if grammar.rules().len() > ORIGINAL_MAX_RULES {
        diagnostics.push(Diagnostic::warning(
            codes::EXCEEDS_ORIGINAL_LIMITS,
            grammar.rules()[ORIGINAL_MAX_RULES].source_line(),
            format!(
                "{} rules exceed the classic interpreter's limit of {ORIGINAL_MAX_RULES}",
                grammar.rules().len()
            ),
        ));
    }
    for rule in grammar.rules() {
        if rule.lhs().as_str().len() > ORIGINAL_MAX_LABEL {
            diagnostics.push(Diagnostic::warning(
                codes::EXCEEDS_ORIGINAL_LIMITS,
                rule.source_line(),
                format!(
                    "rule name `{}...` exceeds the classic interpreter's {ORIGINAL_MAX_LABEL}-character limit",
                    &rule.lhs().as_str()[..16]
                ),
            ));
        }
        let items = rule.rendered_items();
        if items.len() > ORIGINAL_MAX_ITEMS {
            diagnostics.push(Diagnostic::warning(
                codes::EXCEEDS_ORIGINAL_LIMITS,
                rule.source_line(),
                format!(
                    "rule `{}` has {} items; the classic interpreter capped {ORIGINAL_MAX_ITEMS}",
                    rule.lhs(),
                    items.len()
                ),
            ));
        }
        for item in &items {
            if item.len() > ORIGINAL_MAX_LABEL {
                diagnostics.push(Diagnostic::warning(
                    codes::EXCEEDS_ORIGINAL_LIMITS,
                    rule.source_line(),
                    format!(
                        "an item of `{}` exceeds the classic interpreter's {ORIGINAL_MAX_LABEL}-character limit",
                        rule.lhs()
                    ),
                ));
            }
        }
        if let RuleBody::Phrasal(slots) = rule.body() {
            for (i, slot) in slots.iter().enumerate() {
                if slot.alternatives().len() > ORIGINAL_MAX_OPTIONS {
                    diagnostics.push(Diagnostic::warning(
                        codes::EXCEEDS_ORIGINAL_LIMITS,
                        rule.source_line(),
                        format!(
                            "item {} of `{}` has {} options; the classic interpreter capped {ORIGINAL_MAX_OPTIONS}",
                            i + 1,
                            rule.lhs(),
                            slot.alternatives().len()
                        ),
                    ));
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grammar::parse_grammar;

    fn warnings_of(text: &str) -> Vec<Diagnostic> {
        let grammar = parse_grammar(text).expect("grammar should parse");
        validate(&grammar)
    }

    #[test]
    fn probability_sum_above_one_is_a_warning() {
        let diags = warnings_of("S>A.6|B.7\nA>x\nB>y");
        assert!(diags.iter().any(|d| d.code == codes::PROB_SUM_EXCEEDS_ONE));
        assert!(diags.iter().all(|d| !d.is_error()));
    }

    #[test]
    fn sum_of_exactly_one_is_fine() {
        let diags = warnings_of("S>A.3|B.7\nA>x\nB>y");
        assert!(diags.iter().all(|d| d.code != codes::PROB_SUM_EXCEEDS_ONE));
    }

    #[test]
    fn unreferenced_rule_is_reported() {
        let diags = warnings_of("S>NP,VP\nNP>dog\nVP>eats\nX>y");
        let hit = diags
            .iter()
            .find(|d| d.code == codes::UNREACHABLE_RULE)
            .expect("expected unreachable-rule");
        assert_eq!(hit.source_line, 4);
        assert!(hit.message.contains("`X`"));
    }

    #[test]
    fn certain_cycle_is_reported() {
        let diags = warnings_of("S>NP\nNP>S");
        assert!(diags
            .iter()
            .any(|d| d.code == codes::POSSIBLE_UNBOUNDED_RECURSION));
    }

    #[test]
    fn self_loop_is_reported() {
        let diags = warnings_of("S>S");
        assert!(diags
            .iter()
            .any(|d| d.code == codes::POSSIBLE_UNBOUNDED_RECURSION));
    }

    #[test]
    fn annotated_cycle_is_not_certain() {
        let diags = warnings_of("S>NP.5\nNP>S.5");
        assert!(diags
            .iter()
            .all(|d| d.code != codes::POSSIBLE_UNBOUNDED_RECURSION));
    }

    #[test]
    fn mixed_unit_annotations_are_an_error() {
        let errs = parse_grammar("S>NP,VP\nNP>dog}1,cat}2\nVP>eats").unwrap_err();
        let hit = errs
            .iter()
            .find(|d| d.code == codes::UNITS_INCONSISTENT)
            .expect("expected units-inconsistent");
        assert_eq!(hit.source_line, 3);
    }

    #[test]
    fn consistent_units_pass() {
        assert!(parse_grammar("S>NP,VP\nNP>dog}1,cat}2\nVP>eats}3").is_ok());
        assert!(parse_grammar("S>NP,VP\nNP>dog,cat\nVP>eats").is_ok());
    }

    #[test]
    fn oversized_grammars_warn_but_load() {
        let mut text = String::from("S>R1\n");
        for i in 1..300 {
            text.push_str(&format!("R{}>R{}\n", i, i + 1));
        }
        text.push_str("R300>x\n");
        let grammar = parse_grammar(&text).expect("large grammar should still load");
        let diags = validate(&grammar);
        assert!(diags.iter().any(|d| d.code == codes::EXCEEDS_ORIGINAL_LIMITS));
    }
}
