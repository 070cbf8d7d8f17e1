"""
Stage orchestration: Hamiltonian, resonance net, normal form, averaged
potential, cylinder, geodesics.

Each stage reads its config section and the results of the stages it needs,
writes its artifacts through the run's ArtifactStore and returns a report
envelope.  The first failure halts every later stage; the run report is
written either way.
"""
import logging
from dataclasses import dataclass, field

import numpy as np

from diffusion_core.averaging.double_resonance import dr_normal_form
from diffusion_core.averaging.normal_form import single_res_normal_form, zone_action_box
from diffusion_core.averaging.slow_fast import slow_fast_change
from diffusion_core.cache.artifact_store import get_artifact_store
from diffusion_core.cli.config import PipelineConfig, load_pipeline_config
from diffusion_core.datetime.date_time import report_timestamp
from diffusion_core.diophantine.params import DiophantineParams
from diffusion_core.errors.exceptions import AssemblyError, DivergenceError, HypothesisViolationError, UsageError
from diffusion_core.hamiltonian.fourier import FourierHamiltonian, IntegrablePart
from diffusion_core.hamiltonian.frequency import convexity_certificate
from diffusion_core.hamiltonian.scales import PaperConstants, ScaleLadder
from diffusion_core.maupertuis.critical import mane_critical_value
from diffusion_core.maupertuis.geodesics import energy_scan, shortest_geodesic
from diffusion_core.maupertuis.homology import classify_homology
from diffusion_core.maupertuis.kissing import kissing_cylinder_assemble
from diffusion_core.maupertuis.saddle_orbits import saddle_maps_periodic_orbits
from diffusion_core.maupertuis.two_dof import TwoDofHamiltonian
from diffusion_core.nhic.block import straighten_and_block
from diffusion_core.nhic.cylinder import cylinder_graph, tube_check
from diffusion_core.nhic.saddle import truncated_saddle
from diffusion_core.potential_shaper.averaged import ResonanceCurve, averaged_potential
from diffusion_core.potential_shaper.extrema import nondegeneracy_check, track_extrema
from diffusion_core.potential_shaper.measure import family_c3
from diffusion_core.resonance_net.pullback import pullback_to_actions
from diffusion_core.resonance_net.tree import build_tree
from diffusion_core.resonance_net.verification import verify_tree
from diffusion_core.resonance_net.zones import partition_tree
from diffusion_core.response import status
from diffusion_core.response.mixins import ReportHandlerMixin, to_builtin
from diffusion_core.serializers.hamiltonian_serializer import hamiltonian_document
from diffusion_core.serializers.tree_serializer import tree_document

logger = logging.getLogger(__name__)

CERTIFIED_ITEMS = ("item1", "item2", "item3", "item4", "item5", "item6")

SEGMENT_HEADER = ("segment", "generation", "k1", "k2", "k0", "status", "x0", "y0", "x1", "y1")
ZONE_HEADER = ("segment", "kind", "start", "end", "half_width", "center_x", "center_y", "radius")
NORM_HEADER = ("step", "Z_c0", "Z_c2", "R_c0", "R_c2", "low_c0", "min_divisor", "remainder_estimate")
BRANCH_HEADER = ("jf", "position", "value", "curvature", "flagged")
SADDLE_HEADER = ("jf", "psi_s", "j_s", "a", "b", "c", "lambda")
CYLINDER_HEADER = ("psi_f", "jf", "t", "x", "y")
FAMILY_HEADER = ("energy", "length", "period", "rotation_scale", "offset", "channel_1", "channel_2", "hyperbolic")
KISSING_HEADER = ("label", "energy", "index", "psi1", "psi2", "J1", "J2")


def _columns(rows, header):
    return [[row.get(name, "") for name in header] for row in rows]


def paper_constants(config):
    section = config.constants
    return PaperConstants(d=section.d, theta_eff=section.theta_eff, m_eff=section.m_eff)


class PipelineStage(ReportHandlerMixin):
    """
    One step of the run.  Subclasses set ``stage_name``, the config ``section``
    they read, the stages they ``require`` and implement ``execute``.
    ``until`` stops a stage after one of its ``steps``.
    """

    section = None
    requires = ()
    steps = ()

    def __init__(self, config, store, until=None):
        if until is not None and until not in self.steps:
            raise UsageError(f"{self.stage_name} has no step {until!r}", witness={"steps": list(self.steps)})
        self.config = config
        self.store = store
        self.until = until
        self.artifacts = []
        self.constants = []

    @property
    def settings(self):
        return getattr(self.config, self.section) if self.section else None

    def save_json(self, key, payload):
        self.store.set_json(key, payload)
        self.artifacts.append(key)

    def save_csv(self, key, header, rows):
        self.store.set_csv(key, header, _columns(rows, header))
        self.artifacts.append(key)

    def measured(self, name, value):
        self.constants.append({"name": name, "value": float(value), "stage": self.stage_name})

    def execute(self, results):
        raise NotImplementedError

    def run(self, results):
        if self.section and self.settings is None:
            return self.skipped_report(message=f"no {self.section} section")
        missing = [name for name in self.requires if name not in results]
        if missing:
            return self.skipped_report(message=f"needs {', '.join(missing)}")
        try:
            data = self.execute(results)
        except Exception as exc:
            logger.warning("stage %s failed: %s", self.stage_name, exc)
            return self.exception_report(exc)
        logger.info("stage %s: %d artifacts", self.stage_name, len(self.artifacts))
        return self.success_report(
            data=data,
            message=f"{self.stage_name} complete",
            artifacts=list(self.artifacts),
            constants=list(self.constants),
        )


class HamiltonianStage(PipelineStage):
    stage_name = "hamiltonian"
    section = "hamiltonian"

    def execute(self, results):
        settings = self.settings
        terms = [(tuple(term[0]), np.asarray(term[1], dtype=float), *term[2:]) for term in settings.terms]
        H = FourierHamiltonian.from_cosines(
            IntegrablePart.quadratic(settings.h0), terms, epsilon=settings.epsilon, regularity_r=settings.regularity_r
        )
        D = convexity_certificate(H, settings.box, settings.grid)
        self.save_json("hamiltonian.json", hamiltonian_document(H))
        self.measured("D", D)
        results["hamiltonian"] = H
        return {"D": D, "modes": H.n_modes, "epsilon": H.epsilon}


class TreeStage(PipelineStage):
    stage_name = "tree"
    section = "tree"
    requires = ("hamiltonian",)

    def execute(self, results):
        settings = self.settings
        ladder = ScaleLadder(R0=settings.R0, tau=settings.tau, generations=max(settings.generations, 1))
        params = DiophantineParams(eta=settings.eta, tau=settings.tau, cutoff_K=settings.cutoff_K)
        tree = build_tree(
            settings.domain,
            ladder,
            params,
            settings.generations,
            paper_constants(self.config),
            seed=self.config.seed,
            max_centers=settings.max_centers,
            max_children=settings.max_children,
        )
        partition_tree(tree, settings.K_cap)
        report = verify_tree(tree)
        failed = {item: len(report.failures(item)) for item in CERTIFIED_ITEMS if report.failures(item)}
        unmapped = [entry for entry in report.rejections() if entry["item"] not in CERTIFIED_ITEMS]
        if unmapped:
            failed["rejected"] = len(unmapped)
        if failed:
            first = next(iter(failed))
            raise HypothesisViolationError(
                "resonance net breaks certified items",
                witness={"items": failed, "first": (report.failures(first) or unmapped)[0]},
            )
        tree = pullback_to_actions(tree, results["hamiltonian"])

        self.save_json("tree.json", tree_document(tree))
        self.save_json("tree_report.json", report.as_dict())
        self.save_csv("segments.csv", SEGMENT_HEADER, self._segment_rows(tree))
        self.save_csv("zones.csv", ZONE_HEADER, self._zone_rows(tree))
        self.measured("c1", report.constants["c1"])
        self.measured("c2", report.constants["c2"])
        self.measured("K", settings.K_cap)
        results["tree"] = tree
        return {"segments": [len(g) for g in tree.generations], "rejected": len(tree.rejected), "summary": report.summary}

    @staticmethod
    def _segment_rows(tree):
        rows = []
        for segment in tree.segments() + list(tree.rejected):
            k1, k2, k0 = segment.k.k
            (x0, y0), (x1, y1) = segment.endpoints
            rows.append(
                {"segment": segment.id, "generation": segment.generation, "k1": k1, "k2": k2, "k0": k0,
                 "status": segment.status, "x0": x0, "y0": y0, "x1": x1, "y1": y1}
            )
        return rows

    @staticmethod
    def _zone_rows(tree):
        rows = []
        for segment_id, partition in sorted(tree.zones.items()):
            for zone in partition.zones:
                rows.append({"segment": segment_id, "kind": "zone", "start": zone.start, "end": zone.end, "half_width": zone.half_width})
            for core in partition.cores:
                x, y = np.asarray(core.center, dtype=float)
                rows.append(
                    {"segment": segment_id, "kind": "core", "start": core.position, "end": core.position,
                     "center_x": x, "center_y": y, "radius": core.radius}
                )
        return rows


class NormalFormStage(PipelineStage):
    stage_name = "normal_form"
    section = "normal_form"
    requires = ("hamiltonian",)

    def _zone(self, results):
        settings = self.settings
        if settings.segment is None:
            return tuple(settings.k), settings.zone
        if "tree" not in results:
            raise ValueError(f"segment {settings.segment} needs the tree stage")
        tree = results["tree"]
        segment = tree.segment(settings.segment)
        partition = tree.zones[settings.segment]
        return segment.k.k, zone_action_box(results["hamiltonian"], segment, partition.zones[0])

    def execute(self, results):
        settings = self.settings
        k, zone = self._zone(results)
        result = single_res_normal_form(
            results["hamiltonian"],
            k,
            zone,
            settings.steps,
            constants=paper_constants(self.config),
            tolerance=settings.tolerance,
            divisor_floor=settings.divisor_floor,
            grid=settings.grid,
        )
        self.save_json("normal_form.json", result.as_dict())
        self.save_csv("norms.csv", NORM_HEADER, result.norm_table())
        initial = result.initial_norms["low_c0"]
        if result.steps and initial > 0:
            self.measured("C", result.steps[-1].low_c0 / initial)
        results["normal_form"] = result
        results["k"] = tuple(int(x) for x in k)
        return {"k": list(k), "zone": [list(axis) for axis in zone], "steps": result.n_steps, "stagnated": result.stagnated}


class PotentialStage(PipelineStage):
    stage_name = "potential"
    section = "potential"
    requires = ("normal_form",)
    steps = ("track", "check")

    def execute(self, results):
        settings = self.settings
        k = results["k"]
        change = slow_fast_change(k)
        jf = np.linspace(settings.jf[0], settings.jf[1], settings.nodes)
        # the slow action and the energy vanish along the curve
        J = np.column_stack([np.zeros_like(jf), jf, np.zeros_like(jf)])
        curve = ResonanceCurve(jf, change.inverse_actions(J)[:, :2])
        Z = averaged_potential(results["normal_form"].transformed, k, curve)
        branch = track_extrema(Z, grid=settings.grid, newton_tol=self.config.tolerances.newton, orientation=settings.orientation)
        self.save_csv("potential_branch.csv", BRANCH_HEADER, branch.rows())
        results["potential"] = branch
        if self.until == "track":
            self.save_json("potential.json", {"potential": Z, "branch": branch, "certificate": None})
            return {"branch": branch.as_dict(), "rows": branch.rows()}

        certificate = nondegeneracy_check(branch, settings.lambda_star)
        self.save_json("potential.json", {"potential": Z, "branch": branch, "certificate": certificate})
        if not certificate.passed:
            raise HypothesisViolationError(
                "averaged potential is degenerate",
                witness={"clauses": dict(certificate.clauses()), "failures": list(certificate.failures)},
            )
        self.measured("C3", family_c3(Z, settings.nu))
        self.measured("lambda_curvature", certificate.min_curvature)
        return {"branch": branch.as_dict(), "certificate": certificate.as_dict()}


class NhicStage(PipelineStage):
    stage_name = "nhic"
    section = "nhic"
    requires = ("normal_form",)
    steps = ("saddle", "block", "graph")

    def execute(self, results):
        settings = self.settings
        full = results["normal_form"].transformed
        jf = np.linspace(settings.jf[0], settings.jf[1], settings.nodes)
        branch = truncated_saddle(results["normal_form"], slow_fast_change(results["k"]), jf, tol=self.config.tolerances.newton)
        self.save_csv("saddle_branch.csv", SADDLE_HEADER, branch.rows())
        self.measured("lambda_saddle", np.min(branch.lam))
        data = {"saddle": branch.as_dict()}
        if self.until == "saddle":
            return data

        block = straighten_and_block(branch, full)
        self.measured("K_cone", block.K)
        data["block"] = block.as_dict()
        if self.until == "block":
            self.save_json("nhic.json", {"branch": branch, "block": block})
            return data

        graph = cylinder_graph(
            block, full, iterations=settings.iterations, tol=self.config.tolerances.graph, grid=tuple(settings.grid), seed=self.config.seed
        )
        if not graph.converged:
            raise DivergenceError(
                "graph transform did not reach the tolerance",
                witness={"iterations": graph.iterations, "differences": list(graph.differences)},
            )
        tube = None
        if settings.tube_orbits:
            tube = tube_check(graph, full, orbits=settings.tube_orbits, time=settings.tube_time, seed=self.config.seed)
        self.save_json("nhic.json", {"branch": branch, "block": block, "graph": graph, "tube": tube})
        self.save_csv("cylinder.csv", CYLINDER_HEADER, graph.rows())
        results["nhic"] = graph
        data.update(graph=graph.as_dict(), tube=tube)
        return data


class GeodesicStage(PipelineStage):
    stage_name = "geodesics"
    section = "geodesics"
    steps = ("critical", "shortest", "scan", "classify", "orbits", "assemble")
    parts = {
        None: ("scan", "classify", "orbits", "assemble"),
        "critical": (),
        "shortest": ("shortest",),
        "scan": ("scan",),
        "classify": ("classify",),
        "orbits": ("orbits",),
        "assemble": ("orbits", "assemble"),
    }

    def _system(self, results):
        """(ℋ, ε): the configured terms, or the slow system at the configured double resonance."""
        settings = self.settings
        section = settings.double_resonance
        if section is None:
            terms = [(tuple(term[0]), *term[1:]) for term in settings.terms]
            return TwoDofHamiltonian.from_terms(terms, epsilon=settings.epsilon), settings.epsilon
        if "hamiltonian" not in results:
            raise ValueError("double_resonance needs the hamiltonian stage")
        H = results["hamiltonian"]
        result = dr_normal_form(
            H,
            tuple(section.k),
            tuple(section.k_prime),
            section.core,
            constants=paper_constants(self.config),
            tolerance=section.tolerance,
            max_iterations=section.max_iterations,
            grid=section.grid,
        )
        self.save_json("double_resonance.json", result.as_dict())
        self.measured("dr_remainder", result.removed_norm)
        # the slow system carries ε in its amplitudes
        return result.slow_system(), H.epsilon

    def execute(self, results):
        settings = self.settings
        seed, tol = self.config.seed, self.config.tolerances.geodesic
        H, epsilon = self._system(results)
        crit = mane_critical_value(H)
        self.measured("alpha0", crit.alpha0)
        if crit.lambdas is not None:
            self.measured("lambda1", crit.lambdas[0])
            self.measured("lambda2", crit.lambdas[1])
        documents = {"critical": crit}
        data = {"critical": crit.as_dict()}
        energies = crit.alpha0 + epsilon * np.asarray(settings.energy_offsets, dtype=float)

        parts = self.parts[self.until]
        if "shortest" in parts:
            result = shortest_geodesic(H, float(energies[0]), settings.h, restarts=settings.restarts, seed=seed, nodes=settings.nodes, tol=tol)
            documents["shortest"] = result
            data["shortest"] = result.as_dict()
        if "scan" in parts:
            family = energy_scan(H, settings.h, energies, restarts=settings.restarts, seed=seed, nodes=settings.nodes, tol=tol)
            self.save_csv("geodesic_family.csv", FAMILY_HEADER, family.rows())
            documents["family"] = family
            data["family"] = family.rows()
            data["bifurcations"] = [b.as_dict() for b in family.bifurcations]
            results["geodesics"] = family

        if "classify" in parts:
            classification = classify_homology(H, settings.h, crit, restarts=settings.restarts, seed=seed, nodes=settings.nodes)
            documents["classification"] = classification
            data["classification"] = classification.as_dict()

        cylinder = None
        if "orbits" in parts and settings.orbit_energies:
            orbits = saddle_maps_periodic_orbits(H, crit, epsilon * np.asarray(settings.orbit_energies, dtype=float))
            documents["orbits"] = orbits
            data["orbits"] = [orbit.as_dict() for orbit in orbits.orbits]
            if "assemble" in parts:
                cylinder = kissing_cylinder_assemble(H, orbits, samples=settings.samples)
                self.save_csv("kissing.csv", KISSING_HEADER, cylinder.rows())
                documents["kissing"] = cylinder
                data["kissing"] = cylinder.as_dict()

        self.save_json("geodesics.json", documents)
        if cylinder is not None and not cylinder.closes(self.config.tolerances.junction):
            raise AssemblyError("kissing cylinder does not close", witness={"junctions": dict(cylinder.junctions)})
        return data


STAGES = (HamiltonianStage, TreeStage, NormalFormStage, PotentialStage, NhicStage, GeodesicStage)


@dataclass
class RunReport:
    """
    Per-stage envelopes, the measured constants and the artifact manifest.

    ``timestamp`` is the only field that differs between two runs of the same
    configuration.
    """

    seed: int
    output_dir: str
    stages: list = field(default_factory=list)
    constants: list = field(default_factory=list)
    manifest: dict = field(default_factory=dict)
    timestamp: str | None = None

    @property
    def success(self):
        return all(stage["success"] for stage in self.stages)

    @property
    def exit_code(self):
        codes = [stage["status_code"] for stage in self.stages if not stage["success"]]
        return max(codes, default=status.EXIT_SUCCESS)

    def stage(self, name):
        for report in self.stages:
            if report["stage"] == name:
                return report
        raise KeyError(name)

    def as_dict(self):
        return {
            "success": self.success,
            "status_code": self.exit_code,
            "seed": self.seed,
            "output_dir": self.output_dir,
            "timestamp": self.timestamp,
            "stages": to_builtin(self.stages),
            "measured_constants": to_builtin(self.constants),
            "manifest": dict(self.manifest),
        }


def run_stages(config, store, stages=STAGES, until=None):
    """Run ``stages`` in order, halting after the first failure; ``until`` applies to the last one."""
    results, reports, halted = {}, [], None
    for index, cls in enumerate(stages):
        stage = cls(config, store, until if index == len(stages) - 1 else None)
        if halted is not None:
            reports.append(stage.skipped_report(message=f"halted after {halted} failed"))
            continue
        report = stage.run(results)
        reports.append(report)
        if not report["success"]:
            halted = stage.stage_name
    return results, reports


def run_pipeline(config_path, now=None):
    """
    Execute every configured stage and write the manifest and ``report.json``.

    :param config_path: path of the JSON configuration, or a PipelineConfig
    :raises ConfigError: the configuration violates the schema
    """
    config = config_path if isinstance(config_path, PipelineConfig) else load_pipeline_config(config_path)
    store = get_artifact_store(config.output_dir)
    store.clear()
    _, reports = run_stages(config, store)
    constants = [row for report in reports for row in report.get("constants", [])]
    # the output directory is not part of the content
    store.set_json("config.json", {key: value for key, value in config.as_dict().items() if key != "output_dir"})
    manifest = store.write_manifest()
    report = RunReport(
        seed=config.seed,
        output_dir=store.root,
        stages=reports,
        constants=constants,
        manifest=manifest,
        timestamp=report_timestamp(now=now),
    )
    store.write_report(report.as_dict())
    logger.info("run finished with status %d, %d artifacts", report.exit_code, len(manifest))
    return report


def run_stage(config_path, stage_name, until=None):
    """
    Run ``stage_name`` after the stages it needs and return its report, or
    the report of the first needed stage that failed.

    Usage:
        report = run_stage("run.json", "nhic", until="saddle")
    """
    names = [cls.stage_name for cls in STAGES]
    if stage_name not in names:
        raise UsageError(f"unknown stage {stage_name!r}", witness={"stages": names})
    config = config_path if isinstance(config_path, PipelineConfig) else load_pipeline_config(config_path)
    store = get_artifact_store(config.output_dir)
    store.clear()
    needed = {stage_name}
    for cls in reversed(STAGES):
        if cls.stage_name in needed:
            needed.update(cls.requires)
    if "normal_form" in needed and config.normal_form is not None and config.normal_form.segment is not None:
        needed.add("tree")
    if "geodesics" in needed and config.geodesics is not None and config.geodesics.double_resonance is not None:
        needed.add("hamiltonian")
    stages = [cls for cls in STAGES if cls.stage_name in needed]
    _, reports = run_stages(config, store, stages, until)
    store.write_manifest()
    failed = [report for report in reports[:-1] if not report["success"]]
    return failed[0] if failed else reports[-1]
