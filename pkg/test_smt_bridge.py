#!/usr/bin/env python3
"""
Test script for the Symflow SMT bridge

Printing, magic constants, forall* soundness and the query cache run without a
solver; tests taking the `bridge` fixture need z3, cvc5 or bitwuzla on PATH.
"""

import itertools
import re

import pytest

from src.engine.datalog_engine import DatalogEngine
from src.expr.concrete import eval_concrete
from src.expr.expression import Expr, substitute
from src.smt_bridge import (ANCHOR_CONSTANT, BridgeConfig, CyclicLets, IndexOutOfRange, MagicPool, NoTemplate,
                            QueryCache, SmtBridge, SmtPrinter, SmtResult, SmtStatus, SolverNotConfigured, bv_literal,
                            check_forall_star_soundness, inline_operator, order_lets, smt_symbol)
from src.smt_bridge.printer import declared_free_vars

ONE = bv_literal(1, 256)
ZERO = bv_literal(0, 256)

x, y = Expr("x"), Expr("y")


def c(value: int) -> Expr:
    return Expr.const(value)


# --- printing ----------------------------------------------------------------

def test_let_bindings_follow_dependencies(offline_bridge):
    """x2 depends on x1, so x1 is bound first; only the fresh leaf is declared"""
    x1, x2 = Expr("x1"), Expr("x2")
    constraint = Expr("EQ", Expr("ADD", x1, x2), c(3))
    query = offline_bridge.print_to_smt(constraint, lets=[("x2", Expr("SHL", x1, c(1))), ("x1", Expr("fresh"))])
    text = " ".join(query.text.split())
    assert "(declare-const fresh (_ BitVec 256))" in text
    assert "declare-const x1" not in text and "declare-const x2" not in text
    assert text.index("(let ((x1 fresh))") < text.index("(let ((x2 (bvshl x1")
    assert f"(= {ONE} (ite (= (bvadd x1 x2) {bv_literal(3, 256)}) {ONE} {ZERO}))" in text
    assert query.free_vars == ("fresh",)


def _tokens(text: str):
    return re.findall(r"\(|\)|[^\s()]+", text)


def test_let_binding_query_text():
    """The fresh/SHL/ADD example renders token for token, with constants at width 8"""
    x1, x2 = Expr("x1"), Expr("x2")
    constraint = Expr("EQ", Expr("ADD", x1, x2), Expr("0x03"))
    lets = [("x2", Expr("SHL", x1, Expr("0x01"))), ("x1", Expr("fresh"))]
    query = SmtPrinter(width=8).print_to_smt(constraint, lets=lets)
    expected = """
    (declare-const fresh (_ BitVec 8))
      (assert
        (let ((x1 fresh ))
        (let ((x2 (bvshl x1 #x01)))
          (= #x01
             (ite
              (= (bvadd x1  x2 )
                 #x03)
              #x01
              #x00
          )))))
    """
    assert _tokens(query.text) == _tokens(expected)


def test_constant_constraint(offline_bridge):
    query = offline_bridge.print_to_smt(Expr("0x01"))
    assert query.text == f"(assert (= {ONE} {ONE}))"


def test_bound_variable_is_pinned(offline_bridge):
    query = offline_bridge.print_to_smt(Expr("EQ", x, x), bound_vars=["x"])
    assert query.text.count("(declare-const x ") == 1
    assert "(assert (= x #x1123456789abcdef0123456789abcdef" in query.text
    assert query.free_vars == ()
    assert declared_free_vars(query.text) == ()


def test_too_many_bound_variables(offline_bridge):
    names = [f"b{i}" for i in range(17)]
    with pytest.raises(IndexOutOfRange):
        offline_bridge.print_to_smt(Expr("0x1"), bound_vars=names)


def test_cyclic_lets():
    with pytest.raises(CyclicLets):
        order_lets([("a", Expr("ADD", Expr("b"), c(1))), ("b", Expr("SUB", Expr("a"), c(1)))])
    with pytest.raises(CyclicLets):
        order_lets([("a", c(1)), ("a", c(2))])


def test_inline_templates():
    assert inline_operator("isZero", "x", width=8) == "(ite (= x #x00) #x01 #x00)"
    assert inline_operator("my_bvlt", "a", "b", width=8) == "(ite (bvult a b) #x01 #x00)"
    with pytest.raises(NoTemplate):
        inline_operator("ADD", "a", "b")


def test_define_fun_mode():
    printer = SmtPrinter(width=8, use_define_fun=True)
    query = printer.print_to_smt(Expr("ISZERO", Expr("LT", x, y)))
    assert "(define-fun isZero ((a (_ BitVec 8))) (_ BitVec 8) (ite (= a #x00) #x01 #x00))" in query.text
    assert "(define-fun my_bvlt" in query.text
    assert "(isZero (my_bvlt x y))" in query.text


def test_exp_with_constant_exponent():
    printer = SmtPrinter(width=8)
    assert printer.render(Expr("EXP", x, c(0))) == "#x01"
    text = printer.render(Expr("EXP", x, c(5)))
    assert text.count("bvmul") >= 2 and "let" in text


def test_symbol_quoting():
    assert smt_symbol("$fresh_f/x") == "$fresh_f/x"
    assert smt_symbol("a b") == "|a b|"
    assert smt_symbol("let") == "|let|"


# --- magic constants and forall* ----------------------------------------------

def test_magic_pool():
    pool = MagicPool()
    assert pool.magic_constant(0) == ANCHOR_CONSTANT
    assert pool.magic_hex(0).startswith("0x1123456789abcdef0123456789abcdef")
    assert pool.magic_constant(0) == MagicPool().magic_constant(0)
    assert len(set(pool.pool)) == len(pool) == 16
    assert pool.magic_constant(3) == MagicPool(seed=0).magic_constant(3)
    assert pool.magic_constant(3) != MagicPool(seed=1).magic_constant(3)
    with pytest.raises(IndexOutOfRange):
        pool.magic_constant(16)
    assert pool.check_disjoint([1, 2, pool.magic_hex(2)]) == [pool.magic_hex(2)]


def test_forall_star_square_is_one():
    """x*x mod (2^8 - 1) = 1 fails for x = 0, and also for the pinned value"""
    square = Expr("EQ", Expr("MOD", Expr("MUL", x, x), c(0xff)), c(1))
    report = check_forall_star_soundness(square, "x", width=8)
    assert not report.forall_sat
    assert not report.star_sat
    assert not report.violation


def test_forall_star_tautology_and_constant():
    tautology = check_forall_star_soundness(Expr("EQ", x, x), "x", width=8)
    assert tautology.star_sat and tautology.forall_sat

    five = check_forall_star_soundness(Expr("EQ", x, c(5)), "x", width=8)
    assert not five.star_sat and not five.forall_sat


def test_forall_star_square_literal_form():
    """x*x mod 0xff - 0 = 1 with x bound: unsat both ways, and x is pinned in the query text"""
    square = Expr("EQ", Expr("SUB", Expr("MOD", Expr("MUL", x, x), c(0xff)), c(0)), c(1))
    report = check_forall_star_soundness(square, "x", width=8)
    assert not report.forall_sat
    assert not report.star_sat
    assert not report.violation

    query = SmtPrinter(width=8).print_to_smt(square, bound_vars=["x"])
    assert "(bvurem (bvmul x x) #xff)" in query.text
    assert "(assert (= x #xef))" in query.text
    assert query.free_vars == ()


FORALL_OPS = ("ADD", "SUB", "MUL", "AND", "OR", "XOR")
FORALL_CONSTANTS = (0, 1, 7, 0xf)


def _forall_corpus():
    """Formulas over bound b and free x, one per operator, shape and constant"""
    b = Expr("b")
    corpus = {}
    for op, k in itertools.product(FORALL_OPS, FORALL_CONSTANTS):
        k = c(k)
        shapes = [
            Expr("EQ", Expr(op, b, x), k),
            Expr("LT", Expr(op, b, x), k),
            Expr("GT", Expr(op, x, k), b),
            Expr("EQ", Expr(op, x, k), Expr(op, b, k)),
            Expr("EQ", Expr(op, b, x), x),
            Expr("EQ", Expr(op, b, x), Expr(op, x, b)),
            Expr("EQ", Expr(op, b, x), b),
            Expr("ISZERO", Expr(op, b, x)),
        ]
        for shape in shapes:
            corpus[shape] = None
    return list(corpus)


@pytest.mark.slow
def test_forall_star_corpus_has_no_violations():
    corpus = _forall_corpus()
    assert len(corpus) >= 100
    for constraint in corpus:
        report = check_forall_star_soundness(constraint, "b", width=4)
        assert not report.violation, constraint


@pytest.mark.slow
def test_forall_star_corpus_at_width_eight():
    b = Expr("b")
    corpus = [
        Expr("EQ", Expr("ADD", b, x), Expr("ADD", x, b)),
        Expr("EQ", Expr("SUB", b, b), c(0)),
        Expr("EQ", Expr("XOR", b, x), c(0)),
        Expr("LT", x, Expr("ADD", b, c(1))),
        Expr("EQ", Expr("AND", b, x), c(0)),
        Expr("EQ", Expr("MUL", b, x), x),
        Expr("ISZERO", Expr("EQ", b, x)),
        Expr("EQ", Expr("OR", b, x), b),
    ]
    for constraint in corpus:
        assert not check_forall_star_soundness(constraint, "b", width=8).violation, constraint


def test_forall_star_rejects_many_free_vars():
    with pytest.raises(ValueError):
        check_forall_star_soundness(Expr("EQ", Expr("ADD", x, y), Expr("z")), "b", width=4)


# --- cache -------------------------------------------------------------------

def test_cache_persists_across_instances(tmp_path):
    path = tmp_path / "cache" / "answers.tsv"
    cache = QueryCache(path)
    cache.put("(assert q)", SmtResult(SmtStatus.SAT, {"a b": "0x7"}))
    cache.put("(assert q)", SmtResult(SmtStatus.UNSAT))
    assert cache.get("(assert q)").model == {"a b": "0x7"}

    reloaded = QueryCache(path)
    assert reloaded.get("(assert q)") == SmtResult(SmtStatus.SAT, {"a b": "0x7"})
    assert reloaded.get("(assert other)") is None
    assert reloaded.get_stats()["loaded"] == 1


def test_cache_skips_malformed_lines(tmp_path):
    path = tmp_path / "answers.tsv"
    path.write_text("abc\tsat\tx=7\nnot a cache line\n", encoding="utf-8")
    cache = QueryCache(path)
    assert len(cache) == 0
    assert cache.get_stats()["skipped_lines"] == 2


def test_cached_answer_needs_no_solver(tmp_path):
    path = tmp_path / "answers.tsv"
    offline = SmtBridge(BridgeConfig(solver_cmd=None, cache_path=path))
    query = offline.print_to_smt(Expr("EQ", x, c(7)))
    offline.cache.put(query.text, SmtResult(SmtStatus.SAT, {"x": "0x7"}))

    again = SmtBridge(BridgeConfig(solver_cmd=None, cache_path=path))
    assert again.solve(Expr("EQ", x, c(7))).model == {"x": "0x7"}
    assert again.get_stats()["solver_invocations"] == 0


def test_crash_is_reported_and_not_cached(tmp_path):
    with SmtBridge(BridgeConfig(solver_cmd="false", timeout=5, cache_path=tmp_path / "c.tsv")) as bridge:
        result = bridge.solve(Expr("EQ", x, c(1)))
        assert result.status is SmtStatus.UNKNOWN
        assert result.diagnostic.startswith("crash")
        assert len(bridge.cache) == 0
        assert bridge.diagnostics and bridge.diagnostics[0][1] == "unknown"


def test_timeout_status(tmp_path):
    path = tmp_path / "c.tsv"
    with SmtBridge(BridgeConfig(solver_cmd="sleep 30", timeout=0.5, cache_path=path)) as bridge:
        result = bridge.solve(Expr("EQ", x, c(1)))
        assert result.status is SmtStatus.TIMEOUT
        assert result.diagnostic
        assert bridge.get_stats()["timeout"] == 1
        assert len(bridge.cache) == 0
    assert not path.exists() or path.read_text(encoding="utf-8").strip() == ""

    # a timed-out query is asked again, so a bridge without a solver cannot answer it
    again = SmtBridge(BridgeConfig(solver_cmd=None, cache_path=path))
    with pytest.raises(SolverNotConfigured):
        again.solve(Expr("EQ", x, c(1)))


# --- with a solver -----------------------------------------------------------

def test_listing_query_model_checks(bridge):
    x1, x2 = Expr("x1"), Expr("x2")
    constraint = Expr("EQ", Expr("ADD", x1, x2), c(3))
    lets = [("x2", Expr("SHL", x1, c(1))), ("x1", Expr("fresh"))]
    result = bridge.solve(constraint, lets=lets)
    assert result.status is SmtStatus.SAT
    value = int(result.model["fresh"], 16)
    expanded = substitute(substitute(constraint, {"x2": Expr("SHL", x1, c(1))}), {"x1": Expr("fresh")})
    assert eval_concrete(expanded, {"fresh": value}) == 1


def test_contradiction_is_unsat(bridge):
    assert bridge.solve(Expr("0x0")).status is SmtStatus.UNSAT


def test_repeat_query_hits_cache(bridge):
    query = Expr("EQ", Expr("ADD", x, c(5)), c(12))
    first = bridge.solve(query)
    invocations = bridge.get_stats()["solver_invocations"]
    second = bridge.solve(query)
    assert second == first
    assert bridge.get_stats()["solver_invocations"] == invocations
    assert first.model == {"x": "0x7"}


def test_validity_and_equivalence(bridge):
    assert bridge.smt_equivalent(Expr("ADD", x, y), Expr("ADD", y, x))
    assert not bridge.smt_valid(Expr("EQ", x, c(5)))


def test_bound_model_is_sound(bridge):
    """A sat model extended with the magic constant satisfies the constraint"""
    constraint = Expr("EQ", x, Expr("ADD", y, c(1)))
    result = bridge.solve(constraint, bound_vars=["x"])
    assert result.status is SmtStatus.SAT
    env = {"x": ANCHOR_CONSTANT, "y": int(result.model["y"], 16)}
    assert eval_concrete(constraint, env) == 1


def test_comparison_templates_match_concrete(solver_cmd):
    pairs = [(0, 0), (1, 2), (2, 1), (0x7f, 0x80), (0xff, 0), (0x80, 0x80)]
    with SmtBridge(BridgeConfig(solver_cmd=solver_cmd, width=8, timeout=30)) as narrow:
        for op in ("LT", "GT", "SLT", "EQ"):
            for a, b in pairs:
                e = Expr(op, Expr.const(a, 8), Expr.const(b, 8))
                expected = SmtStatus.SAT if eval_concrete(e, {}, 8) == 1 else SmtStatus.UNSAT
                assert narrow.solve(e).status is expected, (op, a, b)


def test_bridge_functors_in_rules(bridge):
    engine = DatalogEngine()
    bridge.register_functors(engine)
    program = engine.parse_program("""
        .type Expr = [base: symbol, left: Expr, right: Expr]
        .type Binding = [var: symbol, value: Expr]
        .type Lets = [head: Binding, tail: Lets]
        .type Model = [binding: Binding, rest: Model]
        .decl Constr(c: Expr, lets: Lets)
        .decl Answer(status: symbol)
        .type Verdict = [status: symbol, model: Model]
        .decl Result(r: Verdict)
        .input Constr
        Answer(s) :- Constr(c, lets), @smt_response(@print_to_smt(c, nil, lets)) = [s].
        Result(r) :- Constr(c, lets), r = @smt_response_with_model(@print_to_smt(c, nil, lets)).
    """)
    db = engine.new_factdb(program)
    constraint = ("EQ", ("ADD", ("x1", None, None), ("x2", None, None)), ("0x3", None, None))
    lets = (("x2", ("SHL", ("x1", None, None), ("0x1", None, None))), (("x1", ("fresh", None, None)), None))
    db.add_python("Constr", [(constraint, lets)])
    result = engine.evaluate(program, db).to_python(["Answer", "Result"])
    assert result["Answer"] == {("sat",)}
    assert result["Result"] == {(("sat", (("fresh", "0x1"), None)),)}
