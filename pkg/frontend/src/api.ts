/**
 * Typed client for the prover API. The fetch implementation is injectable so
 * contract tests can serve recorded fixtures without a network.
 */

export interface Diagnostic {
  position: number;
  message: string;
  severity: string;
}

export interface ProblemView {
  schema_version: number;
  problem_id: string;
  canonical: string;
  kind: "inequality" | "series";
  variables: string[];
  constraints: string[];
}

export interface PieceRecord {
  region?: string;
  label?: string;
  status: string;
  c: string | null;
  reason?: string;
  backends?: { backend: string; status: string; reason?: string }[];
  closed_form?: string;
}

export interface AttemptRecord {
  strategy: string;
  decomposition_key: string;
  coverage: {
    status: string;
    n_samples: number;
    n_uncovered: number;
    witness: Record<string, number> | null;
  };
  pieces: PieceRecord[];
  proved: boolean;
  c: string | null;
  unknown_pieces: number;
  flags: string[];
  assumptions: string[];
}

export interface RunRecord {
  schema_version: number;
  run_id: string;
  status: "pending" | "running" | "done";
  problem_id: string;
  canonical: string;
  kind: string;
  verdict: {
    status?: string;
    c?: string;
    decomposition_key?: string;
    counterexample?: {
      assignment: Record<string, number>;
      lhs_value: number;
      rhs_value: number;
      c: string;
    };
    reasons?: string[];
    best_attempt?: string | null;
  };
  attempts: AttemptRecord[];
}

export class ApiError extends Error {
  constructor(public status: number, public detail: unknown) {
    super(`API error ${status}`);
  }
}

export class ParseRejected extends ApiError {
  constructor(status: number, public diagnostics: Diagnostic[]) {
    super(status, diagnostics);
  }
}

type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export class ApiClient {
  constructor(
    private base: string = "",
    private fetchFn: FetchLike = (...args) => fetch(...args),
  ) {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const resp = await this.fetchFn(this.base + path, {
      headers: { "content-type": "application/json" },
      ...init,
    });
    const body = await resp.json();
    if (!resp.ok) {
      const detail = body?.detail ?? body;
      if (detail?.diagnostics) {
        throw new ParseRejected(resp.status, detail.diagnostics);
      }
      throw new ApiError(resp.status, detail);
    }
    return body as T;
  }

  submitProblem(statementText: string): Promise<ProblemView> {
    return this.request<ProblemView>("/problems", {
      method: "POST",
      body: JSON.stringify({ statement_text: statementText }),
    });
  }

  startRun(problemId: string, config: Record<string, unknown> = {}): Promise<{ run_id: string }> {
    return this.request("/runs", {
      method: "POST",
      body: JSON.stringify({ problem_id: problemId, ...config }),
    });
  }

  getRun(runId: string): Promise<RunRecord> {
    return this.request(`/runs/${runId}`);
  }

  editDecomposition(
    runId: string,
    body: { pieces?: string[]; breakpoints?: string[] },
  ): Promise<{ run_id: string; forked_from: string }> {
    return this.request(`/runs/${runId}/decomposition`, {
      method: "PUT",
      body: JSON.stringify(body),
    });
  }

  listCorpus(): Promise<{ problems: { problem_id: string; statement_text: string; kind: string }[] }> {
    return this.request("/corpus");
  }
}
