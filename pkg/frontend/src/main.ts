import { ApiClient } from "./api.js";
import { ConsoleSession } from "./console.js";
import { ConsoleApp } from "./ui.js";

const params = new URLSearchParams(window.location.search);
const base = params.get("api") ?? "http://127.0.0.1:8080";

const session = new ConsoleSession(new ApiClient(base), 250);
void new ConsoleApp(session).start();
