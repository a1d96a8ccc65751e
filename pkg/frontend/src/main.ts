import { ApiClient } from "./api";
import { createApp } from "./app";
import "./style.css";

// Served by the mining service itself the base is same-origin; a dev server
// points VITE_API_BASE at wherever `capmine serve` is listening.
const base = import.meta.env.VITE_API_BASE ?? "";
createApp(document.getElementById("app")!, new ApiClient(base));
