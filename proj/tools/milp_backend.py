#!/usr/bin/env python3
"""MILP backend for psps: reads free-format MPS, writes the plain solution format.

Solution format: `@status`, `@objective`, `@gap`, `@nodes` header lines followed by
one `<variable> <value>` line per column.

    milp_backend.py --model m.mps --solution out.txt [--gap 0.01] [--time-limit 60]
                    [--warm-start=warm.txt] [--log solver.log] [--engine highs|scipy]
    milp_backend.py --dump m.mps        # parsed model as JSON on stdout
"""

import argparse
import json
import math
import sys


class MpsModel:
    def __init__(self):
        self.name = ""
        self.objective_row = None
        self.objective_offset = 0.0
        self.rows = []  # dicts: name, sense, rhs, terms {col: coef}
        self.row_index = {}
        self.cols = []  # dicts: name, lb, ub, integer, obj
        self.col_index = {}


def _number(token, where):
    try:
        return float(token)
    except ValueError:
        raise ValueError(f"{where}: bad number '{token}'") from None


def read_mps(path):
    m = MpsModel()
    section = None
    integer_block = False
    bounded = set()
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.rstrip("\r\n")
            if not line.strip() or line.lstrip().startswith("*"):
                continue
            where = f"{path}:{lineno}"
            tok = line.split()
            if not line[0].isspace():
                section = tok[0]
                if section == "NAME":
                    m.name = tok[1] if len(tok) > 1 else ""
                elif section == "ENDATA":
                    break
                elif section not in ("ROWS", "COLUMNS", "RHS", "BOUNDS", "RANGES", "OBJSENSE"):
                    raise ValueError(f"{where}: unknown section {section}")
                continue
            if section == "ROWS":
                sense, name = tok[0], tok[1]
                if sense == "N":
                    if m.objective_row is None:
                        m.objective_row = name
                    continue
                if sense not in ("L", "G", "E"):
                    raise ValueError(f"{where}: bad row type {sense}")
                m.row_index[name] = len(m.rows)
                m.rows.append({"name": name, "sense": sense, "rhs": 0.0, "terms": {}})
            elif section == "COLUMNS":
                if len(tok) >= 3 and tok[1] == "'MARKER'":
                    if tok[2] == "'INTORG'":
                        integer_block = True
                    elif tok[2] == "'INTEND'":
                        integer_block = False
                    continue
                col = tok[0]
                if col not in m.col_index:
                    m.col_index[col] = len(m.cols)
                    m.cols.append({"name": col, "lb": 0.0, "ub": math.inf, "integer": integer_block, "obj": 0.0})
                entry = m.cols[m.col_index[col]]
                pairs = tok[1:]
                if len(pairs) % 2:
                    raise ValueError(f"{where}: odd COLUMNS entry")
                for i in range(0, len(pairs), 2):
                    row, value = pairs[i], _number(pairs[i + 1], where)
                    if row == m.objective_row:
                        entry["obj"] += value
                    elif row in m.row_index:
                        terms = m.rows[m.row_index[row]]["terms"]
                        terms[col] = terms.get(col, 0.0) + value
                    else:
                        raise ValueError(f"{where}: unknown row {row}")
            elif section == "RHS":
                pairs = tok[1:] if len(tok) % 2 == 1 else tok
                for i in range(0, len(pairs), 2):
                    row, value = pairs[i], _number(pairs[i + 1], where)
                    if row == m.objective_row:
                        m.objective_offset = -value
                    elif row in m.row_index:
                        m.rows[m.row_index[row]]["rhs"] = value
                    else:
                        raise ValueError(f"{where}: unknown row {row}")
            elif section == "BOUNDS":
                kind, col = tok[0], tok[2]
                if col not in m.col_index:
                    raise ValueError(f"{where}: unknown column {col}")
                c = m.cols[m.col_index[col]]
                value = _number(tok[3], where) if len(tok) > 3 else None
                bounded.add(col)
                if kind == "UP":
                    c["ub"] = value
                elif kind == "LO":
                    c["lb"] = value
                elif kind == "FX":
                    c["lb"] = c["ub"] = value
                elif kind == "FR":
                    c["lb"], c["ub"] = -math.inf, math.inf
                elif kind == "MI":
                    c["lb"] = -math.inf
                elif kind == "PL":
                    c["ub"] = math.inf
                elif kind == "BV":
                    c["lb"], c["ub"], c["integer"] = 0.0, 1.0, True
                elif kind in ("LI", "UI"):
                    c["integer"] = True
                    c["lb" if kind == "LI" else "ub"] = value
                else:
                    raise ValueError(f"{where}: unsupported bound type {kind}")
            elif section == "RANGES":
                raise ValueError(f"{where}: RANGES are not supported")
    for c in m.cols:
        if c["integer"] and c["name"] not in bounded:
            c["ub"] = 1.0
    return m


def _json_number(x):
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return x


def dump(m):
    return {
        "name": m.name,
        "objective_offset": m.objective_offset,
        "columns": [
            {"name": c["name"], "lb": _json_number(c["lb"]), "ub": _json_number(c["ub"]),
             "integer": c["integer"], "obj": c["obj"]}
            for c in m.cols
        ],
        "rows": [
            {"name": r["name"], "sense": r["sense"], "rhs": r["rhs"],
             "terms": [[col, coef] for col, coef in r["terms"].items()]}
            for r in m.rows
        ],
    }


def read_plain(path):
    values = {}
    with open(path, encoding="utf-8") as fh:
        for line in fh:
            tok = line.split()
            if len(tok) != 2 or tok[0].startswith("@") or tok[0].startswith("#"):
                continue
            values[tok[0]] = float(tok[1])
    return values


def write_plain(path, status, objective=None, gap=None, nodes=None, names=(), values=()):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"@status {status}\n")
        if objective is not None and math.isfinite(objective):
            fh.write(f"@objective {objective!r}\n")
        if gap is not None and math.isfinite(gap):
            fh.write(f"@gap {gap!r}\n")
        if nodes is not None:
            fh.write(f"@nodes {int(nodes)}\n")
        for name, v in zip(names, values):
            fh.write(f"{name} {float(v)!r}\n")


def solve_highs(args, model_path):
    import highspy

    h = highspy.Highs()
    h.setOptionValue("output_flag", bool(args.log))
    if args.log:
        h.setOptionValue("log_file", args.log)
        h.setOptionValue("log_to_console", False)
    h.setOptionValue("mip_rel_gap", args.gap)
    h.setOptionValue("time_limit", args.time_limit)
    h.setOptionValue("primal_feasibility_tolerance", 1e-9)
    h.setOptionValue("dual_feasibility_tolerance", 1e-9)
    h.setOptionValue("mip_feasibility_tolerance", 1e-9)
    h.setOptionValue("random_seed", 0)
    h.setOptionValue("threads", 1)
    if h.readModel(model_path) == highspy.HighsStatus.kError:
        raise RuntimeError(f"HiGHS could not read {model_path}")
    lp = h.getLp()
    names = list(lp.col_names_)
    integrality = list(lp.integrality_) if len(lp.integrality_) else []
    int_cols = [j for j, t in enumerate(integrality) if t == highspy.HighsVarType.kInteger]

    if args.warm_start:
        warm = read_plain(args.warm_start)
        sol = highspy.HighsSolution()
        sol.col_value = [warm.get(n, 0.0) for n in names]
        sol.value_valid = True
        h.setSolution(sol)

    h.run()
    status = h.getModelStatus()
    if status == highspy.HighsModelStatus.kUnboundedOrInfeasible:
        h.setOptionValue("presolve", "off")
        h.run()
        status = h.getModelStatus()
    info = h.getInfo()
    S = highspy.HighsModelStatus
    has_values = h.getSolution().value_valid
    if status == S.kInfeasible:
        return "infeasible", None, None, None, names, []
    if status == S.kUnbounded or status == S.kUnboundedOrInfeasible:
        return "unbounded", None, None, None, names, []
    if status == S.kOptimal:
        label = "optimal"
    elif status in (S.kTimeLimit, S.kIterationLimit, S.kSolutionLimit, S.kInterrupt):
        label = "time_limit"
    else:
        return "error", None, None, None, names, []
    if not has_values:
        return label, None, None, None, names, []
    values = list(h.getSolution().col_value)
    gap = float(info.mip_gap) if int_cols else 0.0
    if not math.isfinite(gap):
        gap = 0.0 if label == "optimal" else math.inf
    nodes = int(info.mip_node_count) if int_cols else 0
    objective = float(info.objective_function_value)

    if int_cols:
        # Re-solve the continuous part with the integers fixed for a tighter point.
        for j in int_cols:
            v = float(round(values[j]))
            h.changeColBounds(j, v, v)
            h.changeColIntegrality(j, highspy.HighsVarType.kContinuous)
        h.setOptionValue("presolve", "off")
        h.setSolution(h.getSolution())
        h.run()
        if h.getModelStatus() == S.kOptimal and h.getSolution().value_valid:
            polished = list(h.getSolution().col_value)
            polished_obj = float(h.getInfo().objective_function_value)
            if polished_obj <= objective + 1e-9 * max(1.0, abs(objective)):
                values, objective = polished, polished_obj
    return label, objective, gap, nodes, names, values


def solve_scipy(args, model_path):
    import numpy as np
    from scipy.optimize import Bounds, LinearConstraint, milp
    from scipy.sparse import lil_matrix

    m = read_mps(model_path)
    n = len(m.cols)
    names = [c["name"] for c in m.cols]
    c = np.array([col["obj"] for col in m.cols], dtype=float)
    lb = np.array([col["lb"] for col in m.cols], dtype=float)
    ub = np.array([col["ub"] for col in m.cols], dtype=float)
    integrality = np.array([1 if col["integer"] else 0 for col in m.cols])
    constraints = []
    if m.rows:
        A = lil_matrix((len(m.rows), n))
        lo = np.empty(len(m.rows))
        hi = np.empty(len(m.rows))
        for i, r in enumerate(m.rows):
            for col, coef in r["terms"].items():
                A[i, m.col_index[col]] = coef
            lo[i] = r["rhs"] if r["sense"] in ("G", "E") else -np.inf
            hi[i] = r["rhs"] if r["sense"] in ("L", "E") else np.inf
        constraints.append(LinearConstraint(A.tocsr(), lo, hi))
    res = milp(c, constraints=constraints, integrality=integrality, bounds=Bounds(lb, ub),
               options={"mip_rel_gap": args.gap, "time_limit": args.time_limit, "presolve": True})
    if res.status == 2:
        return "infeasible", None, None, None, names, []
    if res.status == 3:
        return "unbounded", None, None, None, names, []
    if res.x is None:
        return ("time_limit" if res.status == 1 else "error"), None, None, None, names, []
    label = "optimal" if res.status == 0 else "time_limit"
    gap = float(getattr(res, "mip_gap", 0.0) or 0.0) if integrality.any() else 0.0
    nodes = getattr(res, "mip_node_count", None)
    return label, float(res.fun) + m.objective_offset, gap, nodes, names, list(res.x)


def main(argv=None):
    p = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    p.add_argument("--model")
    p.add_argument("--solution")
    p.add_argument("--gap", type=float, default=0.01)
    p.add_argument("--time-limit", type=float, default=3600.0)
    p.add_argument("--warm-start", default=None)
    p.add_argument("--log", default=None)
    p.add_argument("--engine", choices=("auto", "highs", "scipy"), default="auto")
    p.add_argument("--dump", metavar="MPS")
    args = p.parse_args(argv)

    if args.dump:
        json.dump(dump(read_mps(args.dump)), sys.stdout, indent=1)
        sys.stdout.write("\n")
        return 0
    if not args.model or not args.solution:
        p.error("--model and --solution are required")

    engine = args.engine
    if engine == "auto":
        try:
            import highspy  # noqa: F401
            engine = "highs"
        except ImportError:
            engine = "scipy"
    try:
        solver = solve_highs if engine == "highs" else solve_scipy
        label, objective, gap, nodes, names, values = solver(args, args.model)
    except Exception as exc:  # reported through the solution file
        print(f"backend failure: {exc}", file=sys.stderr)
        write_plain(args.solution, "error")
        return 1
    write_plain(args.solution, label, objective, gap, nodes, names, values)
    return 0


if __name__ == "__main__":
    sys.exit(main())
