/**
 * Thin typed wrapper over the litsteer HTTP API.
 *
 * Every mutation the client performs goes through this class; the client
 * holds no authoritative state of its own. The fetch function is
 * injectable so tests can stub the transport.
 */
import type {
  InspectionDoc,
  NodeDoc,
  PaperDoc,
  PipelineDoc,
  ProjectionDoc,
  SessionDoc,
  TreeDoc,
  TreeNodeDoc,
  UserState,
  VerdictDoc,
} from "./types.js";

export type FetchLike = (
  input: string,
  init?: RequestInit,
) => Promise<Response>;

/** A non-2xx API response, carrying the server's error code verbatim. */
export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly code: string,
    message: string,
  ) {
    super(message);
    this.name = "ApiError";
  }
}

export class ApiClient {
  private readonly fetchFn: FetchLike;

  constructor(
    readonly baseUrl: string = "",
    fetchFn?: FetchLike,
  ) {
    // Bind here: passing window.fetch around unbound loses its receiver.
    this.fetchFn = fetchFn ?? ((input, init) => fetch(input, init));
  }

  private async request<T>(
    method: string,
    path: string,
    body?: unknown,
  ): Promise<T> {
    const init: RequestInit = { method };
    if (body !== undefined) {
      init.headers = { "Content-Type": "application/json" };
      init.body = JSON.stringify(body);
    }
    const response = await this.fetchFn(this.baseUrl + path, init);
    if (!response.ok) {
      let code = "HttpError";
      let message = `${response.status} on ${method} ${path}`;
      try {
        const doc = (await response.json()) as {
          error?: string;
          message?: string;
        };
        if (doc.error) code = doc.error;
        if (doc.message) message = doc.message;
      } catch {
        // Non-JSON error body; keep the generic message.
      }
      throw new ApiError(response.status, code, message);
    }
    return (await response.json()) as T;
  }

  // --- sessions --------------------------------------------------------------

  createSession(): Promise<SessionDoc> {
    return this.request("POST", "/sessions");
  }

  getSession(sessionId: string): Promise<SessionDoc> {
    return this.request("GET", `/sessions/${sessionId}`);
  }

  createPipeline(
    sessionId: string,
    queryText: string,
    options: { autoApprove?: boolean; runToNextCheckpoint?: boolean } = {},
  ): Promise<PipelineDoc> {
    return this.request("POST", `/sessions/${sessionId}/pipelines`, {
      query_text: queryText,
      auto_approve: options.autoApprove ?? null,
      run_to_next_checkpoint: options.runToNextCheckpoint ?? false,
    });
  }

  // --- pipeline control ------------------------------------------------------

  step(pipelineId: string): Promise<NodeDoc> {
    return this.request("POST", `/pipelines/${pipelineId}/step`);
  }

  approve(nodeId: string): Promise<PipelineDoc> {
    return this.request("POST", `/nodes/${nodeId}/approve`, {});
  }

  rerun(nodeId: string): Promise<NodeDoc> {
    return this.request("POST", `/nodes/${nodeId}/rerun`, {});
  }

  edit(
    pipelineId: string,
    nodeId: string,
    payload: Record<string, unknown>,
  ): Promise<PipelineDoc> {
    return this.request(
      "POST",
      `/pipelines/${pipelineId}/nodes/${nodeId}/edit`,
      { payload },
    );
  }

  getPipeline(pipelineId: string): Promise<PipelineDoc> {
    return this.request("GET", `/pipelines/${pipelineId}`);
  }

  inspect(pipelineId: string, nodeId: string): Promise<InspectionDoc> {
    return this.request("GET", `/pipelines/${pipelineId}/nodes/${nodeId}`);
  }

  // --- exploration tree --------------------------------------------------------

  getTree(sessionId: string): Promise<TreeDoc> {
    return this.request("GET", `/sessions/${sessionId}/tree`);
  }

  propose(
    treeNodeId: string,
    n?: number,
  ): Promise<{ proposals: TreeNodeDoc[] }> {
    return this.request("POST", `/tree/${treeNodeId}/propose`, {
      n: n ?? null,
    });
  }

  materialize(treeNodeId: string): Promise<PipelineDoc> {
    return this.request("POST", `/tree/${treeNodeId}/materialize`, {});
  }

  // --- projection and papers --------------------------------------------------

  getProjection(
    sessionId: string,
    iterations?: string[],
  ): Promise<ProjectionDoc> {
    let path = `/sessions/${sessionId}/projection`;
    if (iterations && iterations.length > 0) {
      path += `?iterations=${encodeURIComponent(iterations.join(","))}`;
    }
    return this.request("GET", path);
  }

  getPaper(sessionId: string, arxivId: string): Promise<PaperDoc> {
    return this.request("GET", `/sessions/${sessionId}/papers/${arxivId}`);
  }

  setPaperState(
    arxivId: string,
    state: UserState,
    sessionId: string,
  ): Promise<VerdictDoc> {
    return this.request("POST", `/papers/${arxivId}/state`, {
      state,
      session_id: sessionId,
    });
  }

  // --- event stream --------------------------------------------------------------

  eventsUrl(sessionId: string, since: number): string {
    return `${this.baseUrl}/sessions/${sessionId}/events?since=${since}`;
  }

  /** Open the event stream as a raw Response for incremental reading. */
  openEvents(sessionId: string, since: number): Promise<Response> {
    return this.fetchFn(this.eventsUrl(sessionId, since), {
      headers: { Accept: "text/event-stream" },
    });
  }
}
