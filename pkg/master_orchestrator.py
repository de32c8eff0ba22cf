# packnu - packing and covering sets in finite abelian groups

import os
import sys
import json
import concurrent.futures
from datetime import datetime
from typing import Dict, List, Optional

import pandas as pd
from dotenv import load_dotenv

import scan_utils
import verify_utils
from covering_utils import CoverReport, cov_budget, cover_report
from group_utils import GroupSet
from packing_utils import PackingReport, nu_budget, packing_report
from scan_utils import ScanRow, ScanTask

load_dotenv()

DEFAULT_CONFIG = {
    'nu_budget': None,          # None -> PACKNU_NU_BUDGET or the module default
    'cov_budget': None,         # None -> PACKNU_COV_BUDGET or the module default
    'buchstab_step': 1e-3,
    'parallel': 1,
    'verbose': True,
    'timings': False,
    'progress_every': 500,
    'table_columns': ['group', 'params', 'size_a', 'ratio_size', 'lower_ruzsa', 'greedy_b',
                      'nu_exact', 'upper_trivial', 'size_b', 'cov_greedy', 'cov_exact',
                      'bound_ok', 'status'],
}


class PackingOrchestrator:
    def __init__(self, config: Optional[Dict] = None):
        self.config = dict(DEFAULT_CONFIG)
        if config:
            self.config.update(config)
        if self.config['nu_budget'] is None:
            self.config['nu_budget'] = nu_budget()
        if self.config['cov_budget'] is None:
            self.config['cov_budget'] = cov_budget()
        # status lines go to stderr whenever stdout carries data
        self.log_stream = sys.stdout

        self.session_metadata = {
            'start_time': None,
            'end_time': None,
            'command': None,
            'rows_total': 0,
            'rows_failed': [],
            'rows_unknown': [],
            'claims_failed': [],
        }

    def log(self, message: str) -> None:
        if self.config['verbose']:
            print(message, file=self.log_stream, flush=True)

    def _start(self, command: str) -> None:
        self.session_metadata['start_time'] = datetime.now()
        self.session_metadata['command'] = command

    def _finish(self) -> None:
        self.session_metadata['end_time'] = datetime.now()

    @property
    def elapsed_seconds(self) -> Optional[float]:
        start, end = self.session_metadata['start_time'], self.session_metadata['end_time']
        if start and end:
            return (end - start).total_seconds()
        return None

    # --- single instances ------------------------------------------------

    def run_nu(self, A: GroupSet, B: Optional[GroupSet] = None, exact: bool = False,
               order=None) -> PackingReport:
        self._start('nu')
        mode = 'exact' if exact else 'greedy'
        self.log(f"[System] ν for |A|={len(A)} in {A.parent.spec} ({mode})")
        report = packing_report(A, B, exact=exact, budget=self.config['nu_budget'], order=order)
        if report.status == 'unknown':
            self.log(f"[Warning] node budget exhausted after {report.nodes_explored} nodes, "
                     f"best found {len(report.B)}")
        self._finish()
        return report

    def run_cov(self, A: GroupSet, B: Optional[GroupSet] = None, exact: bool = False) -> CoverReport:
        self._start('cov')
        mode = 'exact' if exact else 'greedy'
        self.log(f"[System] cov for |A|={len(A)} in {A.parent.spec} ({mode})")
        report = cover_report(A, B, exact=exact, budget=self.config['cov_budget'])
        if report.status == 'unknown':
            self.log(f"[Warning] node budget exhausted after {report.nodes_explored} nodes, "
                     f"best found {len(report.B)}")
        self._finish()
        return report

    # --- sweeps ----------------------------------------------------------

    def plan_scan(self, family: str, p_range=None, lam_range=None, group: Optional[str] = None,
                  g: Optional[int] = None, exact: bool = False) -> List[ScanTask]:
        return scan_utils.plan_tasks(family, p_range, lam_range, group, g, exact=exact,
                                     budget=self.config['nu_budget'],
                                     cov_budget=self.config['cov_budget'],
                                     timings=self.config['timings'],
                                     buchstab_step=self.config['buchstab_step'])

    def run_scan(self, tasks: List[ScanTask]) -> List[ScanRow]:
        """Rows come back in task order whatever the completion order."""
        self._start('scan')
        workers = max(1, int(self.config['parallel']))
        self.log(f"[System] Scanning {len(tasks)} parameter points with {workers} worker(s)...")
        slots: List[Optional[ScanRow]] = [None] * len(tasks)

        if workers == 1:
            for i, task in enumerate(tasks):
                slots[i] = scan_utils.build_scan_row(task)
                self._progress(i + 1, len(tasks))
        else:
            with concurrent.futures.ProcessPoolExecutor(max_workers=workers) as executor:
                futures = {}
                for i, task in enumerate(tasks):
                    futures[executor.submit(scan_utils.build_scan_row, task)] = i
                done = 0
                for future in concurrent.futures.as_completed(futures):
                    i = futures[future]
                    try:
                        slots[i] = future.result()
                    except Exception as e:
                        task = tasks[i]
                        slots[i] = ScanRow(group=task.group, construction=task.family,
                                           params=task.params_text, status='error',
                                           error=f"[Error] worker failed: {e}")
                    done += 1
                    self._progress(done, len(tasks))

        rows = [row for row in slots if row is not None]
        for row in rows:
            if row.status == 'error':
                self.session_metadata['rows_failed'].append(f"{row.group} {row.params}")
                self.log(f"[Error] {row.group} {row.params}: {row.error}")
            elif row.status == 'unknown':
                self.session_metadata['rows_unknown'].append(f"{row.group} {row.params}")
        self.session_metadata['rows_total'] = len(rows)
        self._finish()
        self.log(f"[System] Scan finished: {len(rows)} rows, "
                 f"{len(self.session_metadata['rows_failed'])} failed, "
                 f"{len(self.session_metadata['rows_unknown'])} over budget "
                 f"({self.elapsed_seconds:.2f}s)")
        return rows

    def _progress(self, done: int, total: int) -> None:
        every = self.config['progress_every']
        if every and done % every == 0 and done < total:
            self.log(f"[System] {done}/{total} rows")

    # --- exports ---------------------------------------------------------

    def _open(self, target: Optional[str]):
        if target is None or target == '-':
            return sys.stdout, False
        folder = os.path.dirname(target)
        if folder and not os.path.exists(folder):
            os.makedirs(folder)
        return open(target, 'w', newline='', encoding='utf-8'), True

    def export_csv(self, rows: List[ScanRow], target: Optional[str] = None) -> None:
        handle, owned = self._open(target)
        try:
            scan_utils.write_scan_csv(rows, handle, timings=self.config['timings'])
        finally:
            if owned:
                handle.close()
        if owned:
            self.log(f"[System] CSV export saved as: {target}")

    def export_json(self, rows: List[ScanRow], target: Optional[str] = None) -> None:
        handle, owned = self._open(target)
        try:
            scan_utils.write_scan_json(rows, handle, timings=self.config['timings'])
        finally:
            if owned:
                handle.close()
        if owned:
            self.log(f"[System] JSON export saved as: {target}")

    def export_report(self, report, target: Optional[str] = None) -> None:
        handle, owned = self._open(target)
        try:
            json.dump(report.to_dict(), handle, indent=2, ensure_ascii=False)
            handle.write('\n')
        finally:
            if owned:
                handle.close()

    def scan_table(self, rows: List[ScanRow]) -> str:
        if not rows:
            return "(no rows)"
        frame = pd.DataFrame([row.to_dict() for row in rows])
        return frame[self.config['table_columns']].to_string(index=False)

    # --- verification ----------------------------------------------------

    def run_verify(self, names: Optional[List[str]] = None, fast: bool = False,
                   inject_fault: bool = False, seed: Optional[int] = None,
                   prime_limit: Optional[int] = None) -> List[verify_utils.ClaimResult]:
        self._start('verify')
        opts = verify_utils.VerifyOptions(fast=fast, inject_fault=inject_fault,
                                          nu_budget=self.config['nu_budget'])
        if seed is not None:
            opts.seed = seed
        if prime_limit is not None:
            opts.prime_limit = prime_limit
        if inject_fault:
            self.log("[Warning] Fault injection enabled: prime interval sets are corrupted on purpose")

        def report(result: verify_utils.ClaimResult) -> None:
            verdict = 'PASS' if result.passed else 'FAIL'
            self.log(f"[System] {verdict} {result.name}: {result.description} "
                     f"({result.instances} instances, {result.seconds:.1f}s)")
            for line in result.failures:
                self.log(f"[Error]   {line}")
            if result.failure_count > len(result.failures):
                self.log(f"[Error]   ... {result.failure_count - len(result.failures)} more")
            for note in result.notes:
                self.log(f"          {note}")

        results = verify_utils.run_suite(opts, names, on_done=report)
        self.session_metadata['claims_failed'] = [r.name for r in results if not r.passed]
        self._finish()
        return results

    def verify_table(self, results: List[verify_utils.ClaimResult]) -> str:
        frame = pd.DataFrame([{
            'claim': r.name,
            'result': 'PASS' if r.passed else 'FAIL',
            'instances': r.instances,
            'failures': r.failure_count,
            'seconds': round(r.seconds, 1),
        } for r in results])
        return frame.to_string(index=False)


if __name__ == "__main__":
    custom_config = {
        'parallel': 2,
        'verbose': True,
        'timings': False,
    }

    orchestrator = PackingOrchestrator(config=custom_config)
    tasks = orchestrator.plan_scan('interval', p_range=(101, 101), lam_range=(2, 9), exact=True)
    rows = orchestrator.run_scan(tasks)
    print(orchestrator.scan_table(rows))

    print(f"\n--- SUMMARY ---")
    print(f"Scan completed in {orchestrator.elapsed_seconds:.2f} seconds")
    print(f"Rows: {orchestrator.session_metadata['rows_total']}")
