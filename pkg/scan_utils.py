import csv
import io
import json
import math
import time
from dataclasses import asdict, dataclass, fields
from typing import Dict, Iterable, List, Optional, Tuple

import numpy as np

from construction_utils import (
    check_tightness,
    graded_parameters,
    graded_set,
    interval_set,
    prime_interval_set,
    rough_interval_set,
    tightness_set,
)
from covering_utils import (
    check_middle_third,
    cov_cap,
    covering_bounds,
    exact_cov,
    greedy_cover,
    middle_third_set,
)
from group_utils import (
    PacknuError,
    SetSpecError,
    is_prime,
    parse_group_spec,
)
from numth_utils import cached_sieve, pnt_lower_estimate, rough_count_vs_buchstab
from packing_utils import exact_nu, greedy_packing, nu_cap, packing_bounds
from setalg_utils import ratio_set

SCHEMA_LINE = '# packnu-schema 1'

FAMILIES = ('interval', 'primes', 'rough', 'graded', 'tightness', 'middlethird')

COLUMNS = [
    'group', 'construction', 'params', 'size_a', 'ratio_size',
    'lower_weak', 'lower_ruzsa', 'upper_trivial', 'greedy_b', 'nu_exact', 'size_b',
    'cov_greedy', 'cov_exact', 'cov_lower', 'cov_upper', 'estimate',
    'bound_ok', 'status', 'error',
]
TIMING_COLUMN = 'wall_ms'

_INT_COLUMNS = {'size_a', 'ratio_size', 'lower_weak', 'lower_ruzsa', 'upper_trivial',
                'greedy_b', 'nu_exact', 'size_b', 'cov_greedy', 'cov_exact'}
_FLOAT_COLUMNS = {'cov_lower', 'cov_upper', 'estimate', 'wall_ms'}
_BOOL_COLUMNS = {'bound_ok'}


# ==================================================
# 1. ROWS
# ==================================================

@dataclass
class ScanRow:
    """
    One parameter point of a sweep. cov_lower/cov_upper carry the generic
    covering bounds, or the middle-third bounds for that family; estimate is
    the prime-counting step for `primes` and the Buchstab estimate for `rough`.
    """
    group: str
    construction: str
    params: str
    size_a: Optional[int] = None
    ratio_size: Optional[int] = None
    lower_weak: Optional[int] = None
    lower_ruzsa: Optional[int] = None
    upper_trivial: Optional[int] = None
    greedy_b: Optional[int] = None
    nu_exact: Optional[int] = None
    size_b: Optional[int] = None
    cov_greedy: Optional[int] = None
    cov_exact: Optional[int] = None
    cov_lower: Optional[float] = None
    cov_upper: Optional[float] = None
    estimate: Optional[float] = None
    bound_ok: Optional[bool] = None
    status: str = 'ok'
    error: str = ''
    wall_ms: Optional[float] = None

    def to_dict(self, timings: bool = False) -> Dict:
        data = asdict(self)
        if not timings:
            data.pop(TIMING_COLUMN)
        return data


@dataclass(frozen=True)
class ScanTask:
    family: str
    group: str
    params: Tuple[Tuple[str, int], ...]
    exact: bool = False
    budget: Optional[int] = None
    cov_budget: Optional[int] = None
    sieve_limit: int = 2
    buchstab_step: float = 1e-3
    timings: bool = False

    @property
    def values(self) -> Dict[str, int]:
        return dict(self.params)

    @property
    def params_text(self) -> str:
        return ','.join(f"{k}={v}" for k, v in self.params)


def _sandwich_ok(row: ScanRow) -> bool:
    chain = [row.lower_weak, row.lower_ruzsa, row.greedy_b, row.nu_exact, row.upper_trivial]
    chain = [v for v in chain if v is not None]
    if any(a > b for a, b in zip(chain, chain[1:])):
        return False
    if row.cov_exact is not None and row.cov_exact < math.ceil(row.cov_lower - 1e-9):
        return False
    if row.cov_greedy is not None and row.cov_greedy > math.ceil(row.cov_upper - 1e-9):
        return False
    return True


def _fill_bounds(row: ScanRow, A) -> None:
    row.size_a = len(A)
    row.ratio_size = len(ratio_set(A))
    row.lower_weak, row.lower_ruzsa, row.upper_trivial = packing_bounds(A)


def _fill_packing(row: ScanRow, A, task: ScanTask) -> None:
    row.greedy_b = len(greedy_packing(A))
    if task.exact and A.parent.order <= nu_cap():
        result = exact_nu(A, budget=task.budget)
        if result.exact:
            row.nu_exact = result.value
        else:
            row.status = 'unknown'
            row.error = f"packing budget exhausted, best found {result.value}"


def _fill_cover(row: ScanRow, A, task: ScanTask) -> None:
    row.cov_lower, row.cov_upper = covering_bounds(A)
    row.cov_greedy = len(greedy_cover(A))
    if task.exact and A.parent.order <= cov_cap():
        result = exact_cov(A, budget=task.cov_budget)
        if result.exact:
            row.cov_exact = result.value
        else:
            row.status = 'unknown'
            row.error = f"cover budget exhausted, best found {result.value}"


def _interval_row(task: ScanTask, row: ScanRow) -> None:
    v = task.values
    A = interval_set(v['p'], v['lambda']).A
    _fill_bounds(row, A)
    _fill_packing(row, A, task)
    _fill_cover(row, A, task)
    row.bound_ok = _sandwich_ok(row)


def _primes_row(task: ScanTask, row: ScanRow) -> None:
    p, lam = task.values['p'], task.values['lambda']
    A = interval_set(p, lam).A
    _fill_bounds(row, A)
    B = prime_interval_set(p, lam, cached_sieve(task.sieve_limit))
    row.size_b = len(B)
    row.estimate = pnt_lower_estimate(p, lam)
    row.bound_ok = row.size_b <= row.upper_trivial


def _rough_row(task: ScanTask, row: ScanRow) -> None:
    p, lam = task.values['p'], task.values['lambda']
    tables = cached_sieve(task.sieve_limit)
    A = interval_set(p, lam).A
    _fill_bounds(row, A)
    B = rough_interval_set(p, lam, tables)
    report = rough_count_vs_buchstab(p, lam, h=task.buchstab_step, count=len(B))
    row.size_b = len(B)
    row.estimate = report.estimate
    row.bound_ok = report.in_window is not False and row.size_b <= row.upper_trivial


def _graded_row(task: ScanTask, row: ScanRow) -> None:
    G = parse_group_spec(task.group)
    v = task.values
    spec = graded_set(G, G.index(v['g']), v['m'], v["m'"])
    A = spec.A
    _fill_bounds(row, A)
    _fill_packing(row, A, task)
    row.bound_ok = _sandwich_ok(row) and row.ratio_size == spec.expected_ratio_size
    if row.nu_exact is not None:
        row.bound_ok = row.bound_ok and row.nu_exact == spec.expected_nu


def _tightness_row(task: ScanTask, row: ScanRow) -> None:
    G = parse_group_spec(task.group)
    spec = tightness_set(G, G.index(task.values['g']))
    A = spec.A
    _fill_bounds(row, A)
    row.greedy_b = len(greedy_packing(A))
    ok = len(A) < 2 * spec.d and row.ratio_size == spec.k
    if task.exact and G.order <= nu_cap():
        report = check_tightness(spec, budget=task.budget)
        if report.status == 'exact':
            row.nu_exact = report.nu
        else:
            row.status = 'unknown'
            row.error = f"packing budget exhausted, best found {report.nu}"
        ok = ok and report.holds
    row.bound_ok = ok and _sandwich_ok(row)


def _middlethird_row(task: ScanTask, row: ScanRow) -> None:
    p = task.values['p']
    A = middle_third_set(p)
    _fill_bounds(row, A)
    row.greedy_b = len(greedy_packing(A))
    row.cov_greedy = len(greedy_cover(A))
    report = check_middle_third(p, budget=task.cov_budget)
    row.cov_lower, row.cov_upper = report.lower, report.upper
    if report.cov.exact:
        row.cov_exact = report.cov.value
    else:
        row.status = 'unknown'
        row.error = f"cover budget exhausted, best found {report.cov.value}, refuted below {report.cov.certified_lower}"
    row.bound_ok = report.passed


_BUILDERS = {
    'interval': _interval_row,
    'primes': _primes_row,
    'rough': _rough_row,
    'graded': _graded_row,
    'tightness': _tightness_row,
    'middlethird': _middlethird_row,
}


def build_scan_row(task: ScanTask) -> ScanRow:
    """Runs one parameter point. Failures are recorded on the row, never raised."""
    row = ScanRow(group=task.group, construction=task.family, params=task.params_text)
    started = time.perf_counter()
    try:
        _BUILDERS[task.family](task, row)
    except PacknuError as e:
        row.status = 'error'
        row.error = f"[Error] {type(e).__name__}: {e}"
    except Exception as e:
        row.status = 'error'
        row.error = f"[Error] unexpected {type(e).__name__}: {e}"
    if task.timings:
        row.wall_ms = (time.perf_counter() - started) * 1000.0
    return row


# ==================================================
# 2. TASK PLANNING
# ==================================================

def parse_range(text: str) -> Tuple[int, int]:
    """`lo..hi` or a single integer."""
    text = (text or '').strip()
    try:
        if '..' in text:
            lo, hi = text.split('..', 1)
            lo, hi = int(lo), int(hi)
        else:
            lo = hi = int(text)
    except ValueError:
        raise SetSpecError(f"bad range {text!r}, expected N or LO..HI")
    if lo > hi:
        raise SetSpecError(f"empty range {text!r}")
    return lo, hi


def primes_in(lo: int, hi: int) -> List[int]:
    return [n for n in range(max(lo, 2), hi + 1) if is_prime(n)]


def _lambda_values(p: int, lam_range: Optional[Tuple[int, int]], family: str) -> Iterable[int]:
    if family == 'interval':
        lo, hi = lam_range or (2, max(2, math.isqrt(p)))
        return range(max(lo, 1), min(hi, p - 1) + 1)
    # 100·λ² <= 81·p
    top = math.isqrt(81 * p // 100)
    while 100 * top * top > 81 * p:
        top -= 1
    lo, hi = lam_range or (2, top)
    return range(max(lo, 2), min(hi, top) + 1)


def plan_tasks(family: str, p_range: Optional[Tuple[int, int]] = None,
               lam_range: Optional[Tuple[int, int]] = None, group: Optional[str] = None,
               g: Optional[int] = None, exact: bool = False, budget: Optional[int] = None,
               timings: bool = False, buchstab_step: float = 1e-3,
               cov_budget: Optional[int] = None) -> List[ScanTask]:
    """
    Expands a family and its ranges into tasks, in output order. budget
    bounds the packing search, cov_budget the cover search.
    """
    if family not in FAMILIES:
        raise SetSpecError(f"unknown scan family {family!r}, expected one of {', '.join(FAMILIES)}")
    common = dict(exact=exact, budget=budget, cov_budget=cov_budget, timings=timings,
                  buchstab_step=buchstab_step)
    tasks = []
    if family in ('interval', 'primes', 'rough', 'middlethird'):
        if p_range is None:
            raise SetSpecError(f"scan {family} needs --p")
        primes = primes_in(*p_range)
        sieve_limit = max(2, p_range[1] // 2)
        for p in primes:
            if family == 'middlethird':
                if p > 3:
                    tasks.append(ScanTask(family, f"multmod:{p}", (('p', p),), **common))
                continue
            for lam in _lambda_values(p, lam_range, family):
                tasks.append(ScanTask(family, f"multmod:{p}", (('p', p), ('lambda', lam)),
                                      sieve_limit=sieve_limit, **common))
        return tasks

    if group is None:
        raise SetSpecError(f"scan {family} needs --group")
    G = parse_group_spec(group)
    if family == 'graded':
        if g is None:
            raise SetSpecError("scan graded needs --g")
        k = G.element_order(G.index(g))
        for m, m_prime in graded_parameters(k):
            tasks.append(ScanTask(family, G.spec, (('g', g), ('m', m), ("m'", m_prime)), **common))
        return tasks

    # tightness: the given g, or the smallest generator of each cyclic subgroup of order >= 4
    if G.kind == 'product':
        raise SetSpecError("scan tightness runs on cyclic or multmod groups")
    if g is not None:
        labels = [g]
    else:
        seen, labels = set(), []
        for x in range(G.order):
            k = G.element_order(x)
            # a cyclic group has one subgroup per order
            if k >= 4 and k not in seen:
                seen.add(k)
                labels.append(G.label(x))
    for label in labels:
        tasks.append(ScanTask(family, G.spec, (('g', label),), **common))
    return tasks


# ==================================================
# 3. CSV / JSON
# ==================================================

def _columns(timings: bool) -> List[str]:
    return COLUMNS + [TIMING_COLUMN] if timings else list(COLUMNS)


def _cell(value) -> str:
    if value is None:
        return ''
    if isinstance(value, (bool, np.bool_)):
        return 'true' if value else 'false'
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    if isinstance(value, np.integer):
        return str(int(value))
    return str(value)


def write_scan_csv(rows: List[ScanRow], handle, timings: bool = False) -> None:
    handle.write(SCHEMA_LINE + '\n')
    keys = _columns(timings)
    writer = csv.DictWriter(handle, fieldnames=keys, lineterminator='\n')
    writer.writeheader()
    for row in rows:
        data = row.to_dict(timings)
        writer.writerow({k: _cell(data[k]) for k in keys})


def scan_csv_text(rows: List[ScanRow], timings: bool = False) -> str:
    buffer = io.StringIO()
    write_scan_csv(rows, buffer, timings)
    return buffer.getvalue()


def _parse_cell(key: str, text: str):
    if key in _INT_COLUMNS:
        return int(text) if text != '' else None
    if key in _FLOAT_COLUMNS:
        return float(text) if text != '' else None
    if key in _BOOL_COLUMNS:
        return {'true': True, 'false': False, '': None}[text]
    return text


def read_scan_csv(handle) -> List[ScanRow]:
    first = handle.readline().rstrip('\r\n')
    if first != SCHEMA_LINE:
        raise SetSpecError(f"not a packnu scan file (first line {first!r})")
    known = {f.name for f in fields(ScanRow)}
    rows = []
    for record in csv.DictReader(handle):
        rows.append(ScanRow(**{k: _parse_cell(k, v) for k, v in record.items() if k in known}))
    return rows


def write_scan_json(rows: List[ScanRow], handle, timings: bool = False) -> None:
    payload = {
        'schema': SCHEMA_LINE.lstrip('# '),
        'columns': _columns(timings),
        'rows': [row.to_dict(timings) for row in rows],
    }
    json.dump(payload, handle, indent=2)
    handle.write('\n')
