#!/usr/bin/env python3
"""
Test script for the Symflow analyses and solver dispatch
"""

import itertools
import random
import time
from pathlib import Path

import pytest

from src.analyses import (OVER_BOUND, CustomAnalysis, DispatchConfig, PointsToAnalysis, SolverDispatch,
                          SymexecAnalysis, run_points_to, run_symexec)
from src.engine.errors import FactIOError, FactTypeError
from src.expr.concrete import eval_concrete
from src.expr.expression import Expr, flatten, variables
from src.native_solver import NativeSolver, NativeSolverConfig
from src.smt_bridge import BridgeConfig, SmtBridge
from src.smt_bridge.errors import SolverNotConfigured
from src.smt_bridge.query_cache import SmtStatus

FIXTURES = Path(__file__).parent / "fixtures"

x, y = Expr("x"), Expr("y")


def c(value: int) -> Expr:
    return Expr.const(value)


def _blocks(result):
    return {row[2] for row in result["Reachable"]}


# --- points-to -----------------------------------------------------------------

def test_points_to_fixture():
    result = run_points_to(FIXTURES / "points_to")
    assert result["VarPointsTo"] == {("v", "h1"), ("this", "h1"), ("w", "h1")}
    assert result["CallGraph"] == {("i1", "T.foo")}
    assert result["Reachable"] == {("main",), ("T.foo",)}


def test_points_to_naive_agrees():
    analysis = PointsToAnalysis()
    semi = analysis.run(FIXTURES / "points_to")
    naive = analysis.run(FIXTURES / "points_to", naive=True)
    assert semi.outputs == naive.outputs
    assert analysis.get_stats()["runs"] == 2


def test_points_to_fields_and_arguments():
    facts = {
        "Reachable": [("main",)],
        "Alloc": [("v", "h1", "main"), ("u", "h2", "main"), ("r", "h3", "m")],
        "Store": [("v", "f", "u")],
        "Load": [("w", "v", "f")],
        "HeapType": [("h1", "T")],
        "VCall": [("v", "m", "i1", "main")],
        "MethodLookup": [("T", "m", "m")],
        "ThisVar": [("m", "this")],
        "ActualArg": [("i1", 0, "u")],
        "FormalArg": [("m", 0, "p")],
        "FormalReturn": [("m", "r")],
        "ActualReturn": [("i1", "ret")],
    }
    result = run_points_to(facts)
    assert result["FldPointsTo"] == {("h1", "f", "h2")}
    assert ("w", "h2") in result["VarPointsTo"]
    assert ("p", "h2") in result["VarPointsTo"]
    assert ("ret", "h3") in result["VarPointsTo"]
    assert result["InterProcAssign"] == {("p", "u"), ("ret", "r")}


def test_missing_fact_directory(tmp_path):
    with pytest.raises(FactIOError):
        run_points_to(tmp_path / "absent")


# --- dispatch ------------------------------------------------------------------

def test_native_dispatch_finds_model(native):
    dispatch = SolverDispatch(native)
    result = dispatch.dispatch_query(Expr("EQ", Expr("ADD", x, c(5)), c(0xc)))
    assert result.status is SmtStatus.SAT
    assert result.model == {"x": "0x7"}
    assert dispatch.get_stats()["native_sat"] == 1


def test_native_dispatch_detects_constant_false(native):
    dispatch = SolverDispatch(native)
    assert dispatch.dispatch_query(Expr("ISZERO", c(1))).status is SmtStatus.UNSAT
    assert dispatch.dispatch_query(Expr("EQ", x, c(1)), [Expr("EQ", c(2), c(3))]).status is SmtStatus.UNSAT


def test_native_answers_are_memoized(native):
    dispatch = SolverDispatch(native)
    cond = Expr("LT", x, c(0x64))
    first = dispatch.dispatch_query(cond)
    assert dispatch.dispatch_query(cond) == first
    assert dispatch.get_stats()["native_queries"] == 1
    assert dispatch.get_stats()["queries"] == 2


def test_native_conflict_is_unknown(native):
    """Each condition alone has a witness, but not the same one"""
    dispatch = SolverDispatch(native)
    result = dispatch.dispatch_query(Expr("LT", x, c(0x64)), [Expr("GT", x, c(0xc8))])
    assert result.status is SmtStatus.UNKNOWN


def test_over_bound_condition(native):
    dispatch = SolverDispatch(native, config=DispatchConfig(switch_size=40))
    pair = Expr("ADD", x, y)
    big = Expr("EQ", Expr("ADD", pair, pair), Expr("ADD", y, c(1)))
    result = dispatch.dispatch_query(big)
    assert result.status is SmtStatus.UNKNOWN
    assert result.diagnostic == OVER_BOUND
    assert dispatch.get_stats()["over_bound"] == 1
    assert dispatch.all_diagnostics()[0][2] == OVER_BOUND


def test_large_query_needs_bridge(native):
    dispatch = SolverDispatch(native, config=DispatchConfig(switch_size=0))
    with pytest.raises(SolverNotConfigured):
        dispatch.dispatch_query(Expr("EQ", x, c(1)))


def test_bound_variables_skip_native(native):
    dispatch = SolverDispatch(native, bound_vars={"x"})
    with pytest.raises(SolverNotConfigured):
        dispatch.dispatch_query(Expr("EQ", x, c(1)))


def test_dispatch_config_validation():
    with pytest.raises(ValueError):
        DispatchConfig(switch_size=-1)


def test_switch_zero_uses_smt(native, bridge):
    dispatch = SolverDispatch(native, bridge, DispatchConfig(switch_size=0))
    result = dispatch.dispatch_query(Expr("EQ", Expr("ADD", x, c(5)), c(0xc)))
    assert result.status is SmtStatus.SAT
    assert int(result.model["x"], 16) == 7
    assert dispatch.get_stats()["smt_queries"] == 1
    assert dispatch.get_stats()["native_queries"] == 0


def test_escalation_resolves_native_unknown(native, bridge):
    dispatch = SolverDispatch(native, bridge, DispatchConfig(escalate=True))
    result = dispatch.dispatch_query(Expr("LT", x, c(0x64)), [Expr("GT", x, c(0xc8))])
    assert result.status is SmtStatus.UNSAT
    assert dispatch.get_stats()["escalated"] == 1


# --- symbolic execution ----------------------------------------------------------

def test_entry_state_binds_fresh_arguments(native):
    result = run_symexec(FIXTURES / "symexec_branch", SolverDispatch(native))
    assert (("b0", None), "x", ("$fresh_f/x", None, None)) in result["Lookup"]
    assert (("b0", None), None, "b0") in result["Reachable"]


def test_constant_branch(native):
    result = run_symexec(FIXTURES / "symexec_branch", SolverDispatch(native))
    assert _blocks(result) == {"b0", "b1"}
    taken = ("b0", ("b0", None))
    assert (taken, (("0x1", None, None), None), "b1") in result["Reachable"]
    assert (taken, "b1", None) in result["Models"]


def test_diamond_with_native_solver(native):
    dispatch = SolverDispatch(native)
    result = run_symexec(FIXTURES / "symexec_diamond", dispatch)
    assert _blocks(result) == {"b0", "b1", "b3"}
    assert any(row[1] == "b2" and row[2] == "unknown" for row in result["SolverDiagnostic"])


def test_diamond_naive_agrees(native):
    analysis = SymexecAnalysis(SolverDispatch(native))
    semi = analysis.run(FIXTURES / "symexec_diamond")
    naive = analysis.run(FIXTURES / "symexec_diamond", naive=True)
    assert semi.outputs == naive.outputs


def test_diamond_with_smt(bridge):
    dispatch = SolverDispatch(None, bridge, DispatchConfig(switch_size=0))
    result = run_symexec(FIXTURES / "symexec_diamond", dispatch)
    assert _blocks(result) == {"b0", "b1", "b3"}
    assert result["SolverDiagnostic"] == set()
    models = {row[1]: row[2] for row in result["Models"]}
    assert models["b1"] is not None
    (name, value), _ = models["b1"]
    assert name == "$fresh_f/x" and int(value, 16) > 0xc8


def test_path_conditions_respect_bound(native):
    result = run_symexec(FIXTURES / "symexec_diamond", SolverDispatch(native), bound=2)
    for _, path_cond, _ in result["Reachable"]:
        length = 0
        while path_cond is not None:
            length, path_cond = length + 1, path_cond[1]
        assert length < 2
    assert _blocks(result) == {"b0", "b1", "b3"}


def test_bound_of_one_keeps_entry_blocks(native):
    result = run_symexec(FIXTURES / "symexec_diamond", SolverDispatch(native), bound=1)
    assert _blocks(result) == {"b0"}


def test_reserved_prefix_in_facts(native, tmp_path):
    for path in (FIXTURES / "symexec_branch").iterdir():
        (tmp_path / path.name).write_text(path.read_text(encoding="utf-8"), encoding="utf-8")
    (tmp_path / "FunctionArg.facts").write_text("f\t$fresh_x\n", encoding="utf-8")
    with pytest.raises(FactTypeError):
        run_symexec(tmp_path, SolverDispatch(native))


def test_symexec_rejects_zero_bound(native):
    with pytest.raises(ValueError):
        SymexecAnalysis(SolverDispatch(native), bound=0)


# --- custom programs -----------------------------------------------------------

def test_custom_program_with_solve(native, tmp_path):
    program = tmp_path / "sat.dl"
    program.write_text("""
        .type Expr = [base: symbol, left: Expr, right: Expr]
        .type PathCond = [cond: Expr, rest: PathCond]
        .decl Cond(c: Expr)
        .decl Sat(c: Expr)
        .input Cond
        .output Sat
        Sat(c) :- Cond(c), @solve(c, nil) = ["sat"].
    """, encoding="utf-8")
    analysis = CustomAnalysis(program, dispatch=SolverDispatch(native))
    taut = ("EQ", ("x", None, None), ("x", None, None))
    never = ("ISZERO", ("0x1", None, None), None)
    result = analysis.run({"Cond": [(taut,), (never,)]})
    assert result["Sat"] == {(taut,)}


WIDTH8_OPS = {
    "ADD": lambda a, b: (a + b) & 0xff,
    "SUB": lambda a, b: (a - b) & 0xff,
    "AND": lambda a, b: a & b,
    "OR": lambda a, b: a | b,
    "XOR": lambda a, b: a ^ b,
    "LT": lambda a, b: int(a < b),
    "GT": lambda a, b: int(a > b),
    "EQ": lambda a, b: int(a == b),
}


def _random_cfg(rng: random.Random):
    """
    An SSA function over one or two arguments: every block but the last branches
    forward on a comparison computed from its own constants and an argument.
    """
    args = [f"a{i}" for i in range(rng.randint(1, 2))]
    blocks = [f"b{i}" for i in range(rng.randint(2, 12))]
    facts = {name: [] for name in ("Assign", "BinOperation", "TrueEdge", "FalseEdge", "PHI")}
    facts["FunctionArg"] = [("f", arg) for arg in args]
    facts["EntryBlock"] = [("f", blocks[0])]
    for i, block in enumerate(blocks[:-1]):
        operand = rng.choice(args)
        facts["Assign"].append((block, f"k{i}", (hex(rng.randrange(256)), None, None)))
        facts["Assign"].append((block, f"j{i}", (hex(rng.randrange(256)), None, None)))
        if rng.random() < 0.5:
            op = rng.choice(["ADD", "SUB", "AND", "OR", "XOR"])
            facts["BinOperation"].append((block, op, operand, f"k{i}", f"t{i}"))
            operand = f"t{i}"
        cmp = rng.choice(["LT", "GT", "EQ"])
        facts["BinOperation"].append((block, cmp, operand, f"j{i}", f"c{i}"))
        facts["TrueEdge"].append((block, rng.choice(blocks[i + 1:]), f"c{i}"))
        facts["FalseEdge"].append((block, rng.choice(blocks[i + 1:]), f"c{i}"))
    return args, facts


def _concretely_reached(args, facts, bound):
    """Blocks some width-8 input reaches along a path shorter than the bound, by enumeration"""
    assign, ops = {}, {}
    for block, var, value in facts["Assign"]:
        assign.setdefault(block, []).append((var, int(value[0], 16)))
    for block, op, left, right, res in facts["BinOperation"]:
        ops.setdefault(block, []).append((op, left, right, res))
    true_edges = {block: (succ, cond) for block, succ, cond in facts["TrueEdge"]}
    false_edges = {block: succ for block, succ, _ in facts["FalseEdge"]}
    entry = facts["EntryBlock"][0][1]

    reached = set()
    for values in itertools.product(range(256), repeat=len(args)):
        block, env, depth = entry, dict(zip(args, values)), 0
        while True:
            reached.add(block)
            env.update(assign.get(block, ()))
            for op, left, right, res in ops.get(block, ()):
                env[res] = WIDTH8_OPS[op](env[left], env[right])
            if block not in true_edges or depth + 1 >= bound:
                break
            succ, cond = true_edges[block]
            block, depth = (succ if env[cond] == 1 else false_edges[block]), depth + 1
    return reached


def _as_expr(value) -> Expr:
    base, left, right = value
    return Expr(base, _as_expr(left) if left else None, _as_expr(right) if right else None)


def _conditions(path_cond):
    while path_cond is not None:
        yield _as_expr(path_cond[0])
        path_cond = path_cond[1]


@pytest.mark.slow
def test_symexec_matches_exhaustive_paths(solver_cmd, tmp_path):
    """50 random CFGs at width 8: Reachable equals enumeration, and every model satisfies its path"""
    rng = random.Random(11)
    config = BridgeConfig(solver_cmd=solver_cmd, timeout=30, width=8, cache_path=tmp_path / "cfg.cache")
    with SmtBridge(config) as bridge:
        for _ in range(50):
            args, facts = _random_cfg(rng)
            dispatch = SolverDispatch(None, bridge, DispatchConfig(switch_size=0))
            result = run_symexec(facts, dispatch, bound=6)
            assert _blocks(result) == _concretely_reached(args, facts, bound=6), facts
            assert result["SolverDiagnostic"] == set()

            path_conds = {(state, block): pc for state, pc, block in result["Reachable"]}
            for state, block, model in result["Models"]:
                env = {}
                while model is not None:
                    (name, value), model = model
                    env[name] = int(value, 16)
                query = flatten("AND", list(_conditions(path_conds[(state, block)])))
                env.update({var: 0 for var in variables(query) if var not in env})
                assert eval_concrete(query, env, 8) == 1, (facts, state, block)


def test_long_path_condition_goes_to_smt(native):
    """Path conditions with over a hundred nodes never reach the native solver"""
    path_cond = [Expr("LT", Expr(f"x{i}"), c(i + 1)) for i in range(40)]
    dispatch = SolverDispatch(native)
    with pytest.raises(SolverNotConfigured):
        dispatch.dispatch_query(Expr("EQ", x, c(1)), path_cond)
    assert dispatch.get_stats()["native_queries"] == 0


def test_long_path_condition_is_sat_over_smt(native, bridge):
    path_cond = [Expr("LT", Expr(f"x{i}"), c(i + 1)) for i in range(40)]
    query = flatten("AND", [Expr("EQ", x, c(1)), *path_cond])
    assert query.size > 100

    dispatch = SolverDispatch(native, bridge)
    result = dispatch.dispatch_query(Expr("EQ", x, c(1)), path_cond)
    assert result.status is SmtStatus.SAT
    stats = dispatch.get_stats()
    assert stats["native_queries"] == 0
    assert stats["smt_queries"] == 1

    env = {var: 0 for var in variables(query)}
    env.update({var: int(value, 16) for var, value in result.model.items()})
    assert eval_concrete(query, env) == 1


def _linear_workload(count: int):
    """Queries `cond AND pathCond` over a few linear equalities, as a path explorer asks them"""
    conditions = [
        Expr("EQ", Expr("ADD", Expr("a"), c(3)), c(10)),
        Expr("EQ", Expr("SUB", Expr("b"), c(5)), c(1)),
        Expr("EQ", Expr("XOR", Expr("d"), c(0xff)), c(0x0f)),
        Expr("EQ", Expr("ADD", c(7), Expr("e")), c(7)),
        Expr("EQ", Expr("SUB", c(9), Expr("f")), c(4)),
        Expr("EQ", Expr("g"), c(0x2a)),
    ]
    queries = []
    for length in range(1, len(conditions) + 1):
        for path in itertools.permutations(conditions, length):
            queries.append((path[0], list(path[1:])))
            if len(queries) == count:
                return queries
    return queries


@pytest.mark.slow
def test_native_path_is_faster_than_smt(solver_cmd):
    queries = _linear_workload(1000)
    assert len(queries) == 1000

    native_dispatch = SolverDispatch(NativeSolver(NativeSolverConfig(max_size=10)), None,
                                     DispatchConfig(switch_size=64))
    started = time.perf_counter()
    native_results = [native_dispatch.dispatch_query(cond, path) for cond, path in queries]
    native_seconds = time.perf_counter() - started

    with SmtBridge(BridgeConfig(solver_cmd=solver_cmd, timeout=30)) as smt:
        smt_dispatch = SolverDispatch(None, smt, DispatchConfig(switch_size=0))
        started = time.perf_counter()
        smt_results = [smt_dispatch.dispatch_query(cond, path) for cond, path in queries]
        smt_seconds = time.perf_counter() - started

    assert native_dispatch.get_stats()["native_sat"] == 1000
    assert native_dispatch.native.get_stats()["runs"] == 6
    assert smt_dispatch.get_stats()["smt"]["solver_invocations"] == 1000
    assert [r.status for r in native_results] == [r.status for r in smt_results]
    assert native_seconds < smt_seconds, (native_seconds, smt_seconds)


def test_redefined_variable_has_one_binding(native):
    one, two = ("0x1", None, None), ("0x2", None, None)
    facts = {
        "FunctionArg": [("f", "x")],
        "EntryBlock": [("f", "b0")],
        "Assign": [("b0", "v", one), ("b0", "c", one), ("b1", "v", two)],
        "TrueEdge": [("b0", "b1", "c")],
    }
    result = run_symexec(facts, SolverDispatch(native))
    after_b1 = ("b1", ("b0", ("b0", None)))
    assert {row[2] for row in result["Lookup"] if row[0] == after_b1 and row[1] == "v"} == {two}
    assert {row[2] for row in result["Lookup"] if row[0] == after_b1 and row[1] == "c"} == {one}


def test_native_and_smt_agree(native, bridge):
    queries = [
        Expr("EQ", Expr("ADD", x, c(5)), c(0xc)),
        Expr("ISZERO", Expr("EQ", c(3), c(3))),
        Expr("LT", x, c(0x64)),
        Expr("EQ", Expr("XOR", x, c(0xff)), c(0xf0)),
        Expr("AND", Expr("LT", x, y), Expr("GT", x, y)),
    ]
    native_only = SolverDispatch(native)
    smt_only = SolverDispatch(None, bridge, DispatchConfig(switch_size=0))
    for query in queries:
        verdict = native_only.dispatch_query(query).status
        if verdict is SmtStatus.UNKNOWN:
            continue
        assert verdict is smt_only.dispatch_query(query).status, query
